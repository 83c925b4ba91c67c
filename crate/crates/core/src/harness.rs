//! Monte Carlo harness: truth simulation, filtering, metrics and CSV output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::czset::ConstrainedZonotope;
use crate::error::{Error, Result};
use crate::filter::{czdc_step, initial_update, FilterConfig, Stage};
use crate::interval::IntervalVector;
use crate::lp::SimplexSolver;
use crate::models::{Benchmark, BenchmarkId};

const REJECTION_CAP: usize = 100_000;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub benchmark: BenchmarkId,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub filter: FilterConfig,
    pub out: Option<PathBuf>,
    /// Write measured step times to the CSV. Off by default so that equal
    /// seeds give byte-identical files.
    pub record_timing: bool,
    /// Draw `x0` uniformly from `X0` instead of using the nominal state.
    pub sample_x0: bool,
    pub parallel: bool,
}

impl RunConfig {
    /// Defaults of the benchmark: its step and run counts and filter settings.
    pub fn for_benchmark(id: BenchmarkId) -> Self {
        let b = id.build();
        Self {
            benchmark: id,
            steps: b.steps,
            runs: b.runs,
            seed: 0,
            filter: b.config,
            out: None,
            record_timing: false,
            sample_x0: false,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.runs == 0 {
            return Err(Error::Invalid("steps and runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-run seed derived from the master seed with a SplitMix64 finalizer.
pub fn run_seed(master: u64, run: usize) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(run as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// States `x_0..=x_K`, filter inputs `u_0..u_{K-1}` and outputs `y_0..=y_K`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub x: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub w: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
}

/// A uniform draw from `set`: exact for axis-aligned boxes, rejection
/// sampling on the interval hull otherwise.
pub fn sample_uniform<R: Rng + ?Sized>(
    set: &ConstrainedZonotope,
    rng: &mut R,
    solver: &mut SimplexSolver,
) -> Result<DVector<f64>> {
    let g = set.generators();
    let is_box =
        set.nh() == 0 && g.is_square() && (0..g.nrows()).all(|i| (0..g.ncols()).all(|j| i == j || g[(i, j)] == 0.0));
    if is_box {
        let xi = DVector::from_fn(g.ncols(), |_, _| rng.random_range(-1.0..=1.0));
        return Ok(g * xi + set.center());
    }
    let hull = set.interval_hull(solver)?;
    for _ in 0..REJECTION_CAP {
        let x = DVector::from_fn(hull.len(), |i, _| {
            let iv = hull[i];
            if iv.diam() > 0.0 {
                rng.random_range(iv.lo()..=iv.hi())
            } else {
                iv.lo()
            }
        });
        if set.contains_point(&x, solver) {
            return Ok(x);
        }
    }
    Err(Error::Invalid("rejection sampling exhausted its attempt budget".into()))
}

pub fn simulate_truth<R: Rng + ?Sized>(
    bench: &Benchmark,
    rng: &mut R,
    steps: usize,
    sample_x0: bool,
) -> Result<Trajectory> {
    let model = &bench.model;
    let mut solver = SimplexSolver::default();
    let x0 = if sample_x0 {
        sample_uniform(&model.x0, rng, &mut solver)?
    } else {
        bench.x0.clone()
    };
    let mut t = Trajectory {
        x: vec![x0],
        u: Vec::with_capacity(steps),
        w: Vec::with_capacity(steps),
        v: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
    };
    let measure = |x: &DVector<f64>, v: &DVector<f64>| {
        let z = DVector::from_iterator(x.len() + v.len(), x.iter().chain(v.iter()).copied());
        model.h.eval(&z)
    };
    let v0 = sample_uniform(&model.v, rng, &mut solver)?;
    t.y.push(measure(&t.x[0], &v0));
    t.v.push(v0);
    for k in 0..steps {
        let w = sample_uniform(&model.w, rng, &mut solver)?;
        let mut u = (bench.true_input)(k);
        if bench.input_carries_noise {
            u += &w;
        }
        let x = &t.x[k];
        let z = DVector::from_iterator(
            model.n + model.p + model.q,
            x.iter().chain(u.iter()).chain(w.iter()).copied(),
        );
        let next = model.f.eval(&z);
        let v = sample_uniform(&model.v, rng, &mut solver)?;
        t.y.push(measure(&next, &v));
        t.x.push(next);
        t.u.push(u);
        t.w.push(w);
        t.v.push(v);
    }
    Ok(t)
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub run: usize,
    pub k: usize,
    pub time_ms: f64,
    pub area: f64,
    pub contained: bool,
    pub hull: IntervalVector,
    pub empty_stage: Option<Stage>,
}

#[derive(Clone, Debug, Default)]
pub struct RunMetrics {
    /// Mean wall time of one filter iteration, milliseconds.
    pub t_cpu_ms: f64,
    /// Mean over runs and steps `k >= 1` of the product of hull diameters.
    pub a_box: f64,
    pub containment_violations: usize,
    /// Steps in which some intersection came out empty.
    pub empty_stages: usize,
    /// Runs aborted by an error, with the message.
    pub failures: Vec<(usize, String)>,
    pub records: Vec<StepRecord>,
}

impl RunMetrics {
    pub fn passed(&self) -> bool {
        self.containment_violations == 0 && self.empty_stages == 0 && self.failures.is_empty()
    }

    /// Mean of the per-step area over runs, indexed by `k`.
    pub fn area_by_step(&self) -> Vec<f64> {
        let kmax = self.records.iter().map(|r| r.k).max().unwrap_or(0);
        let mut sum = vec![0.0; kmax + 1];
        let mut cnt = vec![0usize; kmax + 1];
        for r in &self.records {
            sum[r.k] += r.area;
            cnt[r.k] += 1;
        }
        sum.iter()
            .zip(&cnt)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
            .collect()
    }

    pub fn to_csv(&self, record_timing: bool) -> String {
        let n = self.records.first().map_or(0, |r| r.hull.len());
        let mut s = String::from("run,k,stage_time_ms,area,contained");
        for i in 1..=n {
            let _ = write!(s, ",lo_{i},hi_{i}");
        }
        s.push('\n');
        for r in &self.records {
            let t = if record_timing { r.time_ms } else { 0.0 };
            let _ = write!(
                s,
                "{},{},{},{},{}",
                r.run,
                r.k,
                num(t),
                num(r.area),
                u8::from(r.contained)
            );
            for iv in r.hull.iter() {
                let _ = write!(s, ",{},{}", num(iv.lo()), num(iv.hi()));
            }
            s.push('\n');
        }
        s
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn box_area(h: &IntervalVector) -> f64 {
    h.iter().map(|iv| iv.diam()).product()
}

struct RunOutcome {
    records: Vec<StepRecord>,
    failure: Option<String>,
}

fn run_once(bench: &Benchmark, cfg: &RunConfig, run: usize) -> RunOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(cfg.seed, run));
    let mut records = Vec::with_capacity(cfg.steps + 1);
    let truth = match simulate_truth(bench, &mut rng, cfg.steps, cfg.sample_x0) {
        Ok(t) => t,
        Err(e) => {
            return RunOutcome {
                records,
                failure: Some(format!("simulation: {e}")),
            }
        }
    };
    let model = &bench.model;
    let mut solver = cfg.filter.solver();
    let mut state = match initial_update(&model.x0, &truth.y[0], model, &cfg.filter, &mut solver) {
        Ok(s) => s,
        Err(e) => {
            return RunOutcome {
                records,
                failure: Some(format!("k = 0: {e}")),
            }
        }
    };
    for k in 0..=cfg.steps {
        if k > 0 {
            match czdc_step(&state, &truth.u[k - 1], &truth.y[k], model, &cfg.filter, &mut solver) {
                Ok(s) => state = s,
                Err(e) => {
                    return RunOutcome {
                        records,
                        failure: Some(format!("k = {k}: {e}")),
                    }
                }
            }
        }
        let hull = match state.set.interval_hull(&mut solver) {
            Ok(h) => h,
            Err(e) => {
                return RunOutcome {
                    records,
                    failure: Some(format!("k = {k}: hull: {e}")),
                }
            }
        };
        records.push(StepRecord {
            run,
            k,
            time_ms: state.diagnostics.elapsed.as_secs_f64() * 1e3,
            area: box_area(&hull),
            contained: state.set.contains_point(&truth.x[k], &mut solver),
            hull,
            empty_stage: state.diagnostics.empty_stage,
        });
    }
    RunOutcome { records, failure: None }
}

/// Runs `cfg.runs` independent simulations and filters, in run order.
pub fn run_monte_carlo(cfg: &RunConfig) -> Result<RunMetrics> {
    cfg.validate()?;
    let bench = cfg.benchmark.build();
    bench.model.validate()?;
    cfg.filter.validate(bench.model.n)?;
    let outcomes: Vec<RunOutcome> = if cfg.parallel {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| run_once(&bench, cfg, r))
            .collect()
    } else {
        (0..cfg.runs).map(|r| run_once(&bench, cfg, r)).collect()
    };
    let mut m = RunMetrics::default();
    let (mut t_sum, mut a_sum, mut count) = (0.0, 0.0, 0usize);
    for (run, o) in outcomes.into_iter().enumerate() {
        for r in &o.records {
            if !r.contained {
                m.containment_violations += 1;
            }
            if r.empty_stage.is_some() {
                m.empty_stages += 1;
            }
            if r.k >= 1 {
                t_sum += r.time_ms;
                a_sum += r.area;
                count += 1;
            }
        }
        if let Some(msg) = o.failure {
            m.failures.push((run, msg));
        }
        m.records.extend(o.records);
    }
    if count > 0 {
        m.t_cpu_ms = t_sum / count as f64;
        m.a_box = a_sum / count as f64;
    }
    if let Some(path) = &cfg.out {
        let mut file = std::fs::File::create(path)?;
        file.write_all(m.to_csv(cfg.record_timing).as_bytes())?;
    }
    Ok(m)
}
