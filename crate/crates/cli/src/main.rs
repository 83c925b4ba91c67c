use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use czdc::dcprog::EnclosureKind;
use czdc::harness::{run_monte_carlo, RunConfig};
use czdc::models::BenchmarkId;
use czdc::{selftest, ReductionTargets};

#[derive(Parser)]
#[command(name = "czdc", version, about = "Guaranteed state estimation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Quad2d,
    Attitude,
}

#[derive(Clone, Copy, ValueEnum)]
enum Enclosure {
    Box,
    Partope,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a benchmark, run the filter and write per-step hulls as CSV.
    Run {
        #[arg(long, value_enum)]
        example: Example,
        /// Steps per run (benchmark default if omitted).
        #[arg(long)]
        steps: Option<usize>,
        /// Number of Monte Carlo runs (benchmark default if omitted).
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        phi_c: Option<usize>,
        #[arg(long)]
        phi_g: Option<usize>,
        /// Enclosure polytope for every stage; per-stage defaults if omitted.
        #[arg(long, value_enum)]
        enclosure: Option<Enclosure>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the invariant (consistency) step.
        #[arg(long)]
        no_consistency: bool,
        /// Write measured step times into the CSV.
        #[arg(long)]
        timing: bool,
        /// Draw the initial state uniformly from the prior set.
        #[arg(long)]
        sample_x0: bool,
        /// Run the Monte Carlo runs one after another.
        #[arg(long)]
        serial: bool,
    },
    /// Run the randomized property suites.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            example,
            steps,
            runs,
            phi_c,
            phi_g,
            enclosure,
            seed,
            out,
            no_consistency,
            timing,
            sample_x0,
            serial,
        } => {
            let id = match example {
                Example::Quad2d => BenchmarkId::Quad2d,
                Example::Attitude => BenchmarkId::Attitude,
            };
            let mut cfg = RunConfig::for_benchmark(id);
            cfg.steps = steps.unwrap_or(cfg.steps);
            cfg.runs = runs.unwrap_or(cfg.runs);
            cfg.seed = seed;
            cfg.out = out;
            cfg.record_timing = timing;
            cfg.sample_x0 = sample_x0;
            cfg.parallel = !serial;
            cfg.filter.targets = ReductionTargets::new(
                phi_c.unwrap_or(cfg.filter.targets.phi_c),
                phi_g.unwrap_or(cfg.filter.targets.phi_g),
            );
            cfg.filter.use_consistency = !no_consistency;
            if let Some(e) = enclosure {
                cfg.filter = cfg.filter.with_enclosure(match e {
                    Enclosure::Box => EnclosureKind::Box,
                    Enclosure::Partope => EnclosureKind::Parallelotope,
                });
            }
            let m = match run_monte_carlo(&cfg) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            println!("benchmark      {id}");
            println!("steps x runs   {} x {}", cfg.steps, cfg.runs);
            println!("T_cpu          {:.3} ms", m.t_cpu_ms);
            println!("A_box          {:.6e}", m.a_box);
            println!("violations     {}", m.containment_violations);
            println!("empty stages   {}", m.empty_stages);
            for (run, msg) in &m.failures {
                println!("run {run} failed: {msg}");
            }
            if m.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Selftest { seed } => {
            let results = selftest::run_all(seed);
            for r in &results {
                println!("[{}] {}: {}", if r.passed { "pass" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
