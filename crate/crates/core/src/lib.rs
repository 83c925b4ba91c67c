//! Guaranteed state estimation for discrete-time nonlinear systems with
//! unknown-but-bounded noise and state constraints.
//!
//! Sets are constrained zonotopes ([`czset::ConstrainedZonotope`]); nonlinear
//! maps are linearized with remainders bounded through difference-of-convex
//! decompositions ([`dcprog`]). [`filter`] chains the forecast, measurement
//! update, admissibility, consistency and order-reduction steps, [`models`]
//! holds the two benchmark systems and [`harness`] runs Monte Carlo batches.

#![allow(clippy::needless_range_loop)]

pub mod czset;
pub mod dcprog;
pub mod error;
pub mod filter;
pub mod harness;
pub mod interval;
pub mod lp;
pub mod models;
pub mod selftest;

pub use czset::{ConstrainedZonotope, ReductionTargets, Zonotope};
pub use error::{Error, Result};
pub use interval::{Interval, IntervalMatrix, IntervalVector};
pub use lp::{LinearProgram, LpSolution, LpStatus, LpTolerances, SimplexSolver};
