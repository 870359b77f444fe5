//! Random hyperparameter search over the preprocessing and annealer
//! settings, and least-squares analysis of the results.

mod regression;

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::anneal::{AnnealConfig, PostProc, Solver, BETA_COLD, BETA_HOT};
use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::preprocess::{GaConfig, Method, PreprocessConfig};
use crate::problem::{ProblemInstance, Vertex};
use crate::qubo::DEFAULT_A;

pub use regression::{ols, regress, Coefficient, CoefficientFit, RegressionReport, Significance};

/// Default effort of the sweep's annealer, in sweeps per microsecond of
/// anneal time. Far below the solver default so that a few hundred runs
/// finish on one core.
pub const SWEEP_SWEEPS_PER_US: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub a_const: f64,
    pub sweeps_per_us: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            a_const: DEFAULT_A,
            sweeps_per_us: SWEEP_SWEEPS_PER_US,
        }
    }
}

/// One sampled hyperparameter assignment and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub run_id: u32,
    pub seed: u64,
    pub method: Method,
    pub ga: Option<GaConfig>,
    pub num_nodes: usize,
    pub largest_group: usize,
    pub num_reps: u32,
    pub anneal_time_us: u32,
    pub prog_time_us: u32,
    pub read_time_us: u32,
    pub spin_rev: u32,
    pub solver: Solver,
    pub post_proc: PostProc,
    /// `None` when the run failed.
    pub outcome: Option<RunOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub coverage: f64,
    pub energy: f64,
    pub total_time_us: u64,
    pub anneal_time_total_us: u64,
}

impl SweepRecord {
    pub fn failed(&self) -> bool {
        self.outcome.is_none()
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            method: self.method,
            num_nodes: self.num_nodes,
            largest_group: self.largest_group,
            ga: self.ga,
            seed: self.seed,
        }
    }

    pub fn anneal_config(&self, sweeps_per_us: f64) -> AnnealConfig {
        AnnealConfig {
            num_reps: self.num_reps,
            anneal_time_us: self.anneal_time_us,
            prog_time_us: self.prog_time_us,
            read_time_us: self.read_time_us,
            spin_rev: self.spin_rev,
            solver: self.solver,
            post_proc: self.post_proc,
            seed: self.seed.wrapping_add(1),
            sweeps_per_us,
            beta_hot: BETA_HOT,
            beta_cold: BETA_COLD,
        }
    }

    /// Checks every hyperparameter range and dependency rule.
    pub fn validate(&self) -> Result<()> {
        self.preprocess_config().validate(true)?;
        let a = self.anneal_config(1.0);
        a.validate(true)?;
        if let Some(o) = &self.outcome {
            if !(0.0..=1.0).contains(&o.coverage) {
                return Err(Error::domain(format!("coverage {} outside [0, 1]", o.coverage)));
            }
        }
        Ok(())
    }
}

/// Draws every hyperparameter uniformly from its range: integers inclusive,
/// the mutation rate as a real, categories with equal probability. GA
/// settings exist only for the genetic method, the spin-reversal count never
/// exceeds the repetitions, and the VFYC solver always optimizes.
pub fn sample_hyperparameters(run_id: u32, seed: u64) -> SweepRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_id as u64);
    let method = Method::ALL[rng.random_range(0..3)];
    let ga = (method == Method::Genetic).then(|| GaConfig {
        num_gen: rng.random_range(GaConfig::NUM_GEN.0..=GaConfig::NUM_GEN.1),
        pop_size: rng.random_range(GaConfig::POP_SIZE.0..=GaConfig::POP_SIZE.1),
        mut_rate: rng.random_range(GaConfig::MUT_RATE.0..GaConfig::MUT_RATE.1),
    });
    let num_nodes = rng.random_range(PreprocessConfig::NUM_NODES.0..=PreprocessConfig::NUM_NODES.1);
    let largest_group =
        rng.random_range(PreprocessConfig::LARGEST_GROUP.0..=PreprocessConfig::LARGEST_GROUP.1);
    let num_reps = rng.random_range(AnnealConfig::NUM_REPS.0..=AnnealConfig::NUM_REPS.1);
    let anneal_time_us = rng.random_range(AnnealConfig::ANNEAL_TIME_US.0..=AnnealConfig::ANNEAL_TIME_US.1);
    let prog_time_us = rng.random_range(AnnealConfig::PROG_TIME_US.0..=AnnealConfig::PROG_TIME_US.1);
    let read_time_us = rng.random_range(AnnealConfig::READ_TIME_US.0..=AnnealConfig::READ_TIME_US.1);
    let spin_rev = rng.random_range(1..=num_reps);
    let solver = if rng.random::<bool>() { Solver::Dw2x } else { Solver::Vfyc };
    let drawn_post = if rng.random::<bool>() { PostProc::Optimize } else { PostProc::None };
    let post_proc = if solver == Solver::Vfyc { PostProc::Optimize } else { drawn_post };
    SweepRecord {
        run_id,
        seed: rng.random(),
        method,
        ga,
        num_nodes,
        largest_group,
        num_reps,
        anneal_time_us,
        prog_time_us,
        read_time_us,
        spin_rev,
        solver,
        post_proc,
        outcome: None,
    }
}

/// Runs `n_runs` independent pipelines with sampled hyperparameters. Runs
/// execute in parallel; records come back in `run_id` order.
pub fn run_sweep(
    inst: &ProblemInstance,
    n_runs: u32,
    seed: u64,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>> {
    if n_runs == 0 {
        return Err(Error::domain("a sweep needs at least one run"));
    }
    let top = PreprocessConfig::LARGEST_GROUP.1.min(inst.n_sats);
    let min = inst.min_group.min(top);
    let universe = inst.clone().with_group_sizes(min, top)?;
    let vertices = universe.candidate_vertices()?;
    let records = (0..n_runs)
        .into_par_iter()
        .map(|run_id| {
            let mut rec = sample_hyperparameters(run_id, seed);
            rec.outcome = run_one(inst, &vertices, &rec, opts).ok();
            rec
        })
        .collect();
    Ok(records)
}

fn run_one(
    inst: &ProblemInstance,
    vertices: &[Vertex],
    rec: &SweepRecord,
    opts: &SweepOptions,
) -> Result<RunOutcome> {
    let cfg = PipelineConfig {
        preprocess: rec.preprocess_config(),
        anneal: rec.anneal_config(opts.sweeps_per_us),
        a_const: opts.a_const,
    };
    let out = run_pipeline(inst, vertices, &cfg)?;
    Ok(RunOutcome {
        coverage: out.coverage,
        energy: out.energy,
        total_time_us: out.total_time_us,
        anneal_time_total_us: out.anneal_time_total_us,
    })
}

pub const RESULTS_HEADER: &str = "run_id,seed,method,num_gen,pop_size,mut_rate,num_nodes,largest_group,num_reps,anneal_time_us,prog_time_us,read_time_us,spin_rev,solver,post_proc,status,coverage,energy,total_time_us,anneal_time_total_us";

/// Results table, one header row and one row per record. GA columns are
/// empty for non-genetic runs and outcome columns are empty for failed runs.
pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let (g, p, m) = match r.ga {
            Some(ga) => (ga.num_gen.to_string(), ga.pop_size.to_string(), ga.mut_rate.to_string()),
            None => Default::default(),
        };
        let _ = write!(
            out,
            "{},{},{},{g},{p},{m},{},{},{},{},{},{},{},{},{},",
            r.run_id,
            r.seed,
            r.method,
            r.num_nodes,
            r.largest_group,
            r.num_reps,
            r.anneal_time_us,
            r.prog_time_us,
            r.read_time_us,
            r.spin_rev,
            r.solver,
            r.post_proc
        );
        match &r.outcome {
            Some(o) => {
                let _ = writeln!(
                    out,
                    "ok,{},{},{},{}",
                    o.coverage, o.energy, o.total_time_us, o.anneal_time_total_us
                );
            }
            None => out.push_str("failed,,,,\n"),
        }
    }
    out
}

pub fn write_records(path: &Path, records: &[SweepRecord]) -> Result<()> {
    std::fs::write(path, records_to_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text)
}

pub fn parse_records(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_ok = rdr
        .headers()
        .map(|h| h.iter().collect::<Vec<_>>().join(",") == RESULTS_HEADER)
        .unwrap_or(false);
    if !header_ok {
        return Err(Error::format(1, "unexpected results header"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::format(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| &rec[i];
        fn num<T: std::str::FromStr>(line: u64, name: &str, s: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            s.parse()
                .map_err(|e| Error::format(line, format!("{name}: {e} in {s:?}")))
        }
        let method: Method = field(2).parse().map_err(|e: Error| Error::format(line, e.to_string()))?;
        let ga = if field(3).is_empty() {
            None
        } else {
            Some(GaConfig {
                num_gen: num(line, "num_gen", field(3))?,
                pop_size: num(line, "pop_size", field(4))?,
                mut_rate: num(line, "mut_rate", field(5))?,
            })
        };
        let outcome = match field(15) {
            "ok" => Some(RunOutcome {
                coverage: num(line, "coverage", field(16))?,
                energy: num(line, "energy", field(17))?,
                total_time_us: num(line, "total_time_us", field(18))?,
                anneal_time_total_us: num(line, "anneal_time_total_us", field(19))?,
            }),
            "failed" => None,
            other => return Err(Error::format(line, format!("unknown status {other:?}"))),
        };
        let record = SweepRecord {
            run_id: num(line, "run_id", field(0))?,
            seed: num(line, "seed", field(1))?,
            method,
            ga,
            num_nodes: num(line, "num_nodes", field(6))?,
            largest_group: num(line, "largest_group", field(7))?,
            num_reps: num(line, "num_reps", field(8))?,
            anneal_time_us: num(line, "anneal_time_us", field(9))?,
            prog_time_us: num(line, "prog_time_us", field(10))?,
            read_time_us: num(line, "read_time_us", field(11))?,
            spin_rev: num(line, "spin_rev", field(12))?,
            solver: field(13).parse().map_err(|e: Error| Error::format(line, e.to_string()))?,
            post_proc: field(14).parse().map_err(|e: Error| Error::format(line, e.to_string()))?,
            outcome,
        };
        record.validate().map_err(|e| Error::format(line, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

/// Mean coverage and count of successful runs per preprocessing method.
pub fn method_summary(records: &[SweepRecord]) -> Vec<(Method, usize, f64)> {
    Method::ALL
        .iter()
        .map(|&m| {
            let cov: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m)
                .filter_map(|r| r.outcome.map(|o| o.coverage))
                .collect();
            let mean = if cov.is_empty() { f64::NAN } else { cov.iter().sum::<f64>() / cov.len() as f64 };
            (m, cov.len(), mean)
        })
        .collect()
}
