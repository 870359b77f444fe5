//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::anneal::{AnnealConfig, PostProc, Solver, BETA_COLD, BETA_HOT, SWEEPS_PER_US};
use crate::error::{Error, Result};
use crate::oracle::{exact_best_partition, stirling2};
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::preprocess::{GaConfig, Method, PreprocessConfig};
use crate::problem::{read_instance, write_coverage_csv, write_instance};
use crate::problem::{ProblemInstance, DEFAULT_MIN_GROUP, MAX_SATS};
use crate::qubo::DEFAULT_A;
use crate::sweep::{method_summary, read_records, regress, run_sweep, write_records, SweepOptions, SWEEP_SWEEPS_PER_US};

#[derive(Debug, Parser)]
#[command(name = "satclique", version, about = "Split a satellite constellation into sub-constellations")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic instance (metadata and coverage table).
    Generate(GenerateArgs),
    /// Run preprocessing, annealing and repair on an instance.
    Solve(Box<SolveArgs>),
    /// Exhaustive optimum over all partitions.
    Oracle(OracleArgs),
    /// Random hyperparameter sweep; writes the results CSV.
    Sweep(SweepArgs),
    /// Least-squares analysis of a results CSV.
    Regress(RegressArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=MAX_SATS as u64))]
    pub n_sats: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_GROUP)]
    pub min_group: usize,
    #[arg(long)]
    pub max_group: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Number of groups (default: the instance's).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "prune", value_parser = parse_method)]
    pub method: Method,
    #[arg(long, default_value_t = 40)]
    pub num_nodes: usize,
    /// Largest group size considered (default: the instance's maximum).
    #[arg(long)]
    pub largest_group: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub ga_num_gen: u32,
    #[arg(long, default_value_t = 100)]
    pub ga_pop_size: u32,
    #[arg(long, default_value_t = 0.1)]
    pub ga_mut_rate: f64,
    #[arg(long, default_value_t = 100)]
    pub anneal_num_reps: u32,
    #[arg(long, default_value_t = 20)]
    pub anneal_time_us: u32,
    #[arg(long, default_value_t = 1000)]
    pub anneal_prog_time_us: u32,
    #[arg(long, default_value_t = 100)]
    pub anneal_read_time_us: u32,
    #[arg(long, default_value_t = 1)]
    pub anneal_spin_rev: u32,
    #[arg(long, default_value = "DW2X", value_parser = parse_solver)]
    pub anneal_solver: Solver,
    #[arg(long, default_value = "Optimize", value_parser = parse_post_proc)]
    pub anneal_post_proc: PostProc,
    #[arg(long, default_value_t = SWEEPS_PER_US)]
    pub anneal_sweeps_per_us: f64,
    #[arg(long, default_value_t = DEFAULT_A)]
    pub a_const: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reject hyperparameters outside the documented sweep ranges.
    #[arg(long)]
    pub strict_ranges: bool,
    #[arg(long)]
    pub export_qubo: Option<PathBuf>,
    #[arg(long)]
    pub export_samples: Option<PathBuf>,
    #[arg(long)]
    pub export_nodes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub runs: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SWEEP_SWEEPS_PER_US)]
    pub sweeps_per_us: f64,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Also write the coefficient table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_solver(s: &str) -> std::result::Result<Solver, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_post_proc(s: &str) -> std::result::Result<PostProc, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Format { .. } | Error::Domain(_) => 2,
        Error::Infeasible(_) | Error::Lookup(_) => 3,
        Error::GuardExceeded { .. } => 4,
        Error::Io { .. } | Error::Mapping(_) => 1,
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(t) = cli.threads {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let mut out = String::new();
    let result = execute(&cli.command, &mut out);
    let _ = std::io::stdout().write_all(out.as_bytes());
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one command, appending its report to `out`.
pub fn execute(cmd: &Command, out: &mut String) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Oracle(a) => oracle(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Regress(a) => regress_cmd(a, out),
    }
}

fn load(dir: &std::path::Path, k: Option<usize>) -> Result<ProblemInstance> {
    let inst = read_instance(dir)?;
    match k {
        Some(k) => inst.with_k(k),
        None => Ok(inst),
    }
}

fn generate(a: &GenerateArgs, out: &mut String) -> Result<()> {
    let inst = ProblemInstance::synthetic(a.n_sats as usize, a.k, a.min_group, a.max_group, a.seed)?;
    write_instance(&a.out, &inst)?;
    let _ = writeln!(
        out,
        "wrote {} groups of {}..={} satellites",
        inst.vertex_count(),
        inst.min_group,
        inst.max_group
    );
    Ok(())
}

fn solve(a: &SolveArgs, out: &mut String) -> Result<()> {
    let inst = load(&a.instance, a.k)?;
    let vertices = inst.candidate_vertices()?;
    let preprocess = PreprocessConfig {
        method: a.method,
        num_nodes: a.num_nodes,
        largest_group: a.largest_group.unwrap_or(inst.max_group),
        ga: (a.method == Method::Genetic).then_some(GaConfig {
            num_gen: a.ga_num_gen,
            pop_size: a.ga_pop_size,
            mut_rate: a.ga_mut_rate,
        }),
        seed: a.seed,
    };
    let anneal = AnnealConfig {
        num_reps: a.anneal_num_reps,
        anneal_time_us: a.anneal_time_us,
        prog_time_us: a.anneal_prog_time_us,
        read_time_us: a.anneal_read_time_us,
        spin_rev: a.anneal_spin_rev,
        solver: a.anneal_solver,
        post_proc: a.anneal_post_proc,
        seed: a.seed.wrapping_add(1),
        sweeps_per_us: a.anneal_sweeps_per_us,
        beta_hot: BETA_HOT,
        beta_cold: BETA_COLD,
    }
    .normalized();
    preprocess.validate(a.strict_ranges)?;
    anneal.validate(a.strict_ranges)?;
    let cfg = PipelineConfig {
        preprocess,
        anneal,
        a_const: a.a_const,
    };
    let res = run_pipeline(&inst, &vertices, &cfg)?;

    if let Some(p) = &a.export_qubo {
        res.qubo.write_csv(p)?;
    }
    if let Some(p) = &a.export_samples {
        std::fs::write(p, res.samples.to_csv()).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &a.export_nodes {
        write_coverage_csv(p, &res.selection.vertices, inst.n_sats)?;
    }

    out.push_str(&res.partition.to_lines(inst.n_sats));
    let t = res.samples.timing;
    let _ = writeln!(out, "coverage: {:.6}", res.coverage);
    let _ = writeln!(out, "energy: {:.6}", res.energy);
    let _ = writeln!(
        out,
        "nodes: {}{}",
        res.selection.vertices.len(),
        if res.selection.short { " (fewer candidates than requested)" } else { "" }
    );
    let _ = writeln!(
        out,
        "reads: {} distinct of {}",
        res.samples.samples.len(),
        res.samples.total_reads()
    );
    let _ = writeln!(
        out,
        "time_us: anneal {} prog {} read {} total {}",
        t.anneal_us, t.prog_us, t.read_us, res.total_time_us
    );
    Ok(())
}

fn oracle(a: &OracleArgs, out: &mut String) -> Result<()> {
    let inst = load(&a.instance, a.k)?;
    let (p, cov) = exact_best_partition(&inst)?;
    out.push_str(&p.to_lines(inst.n_sats));
    let _ = writeln!(out, "coverage: {cov:.12}");
    let _ = writeln!(out, "partitions: {}", stirling2(inst.n_sats, inst.k_groups)?);
    Ok(())
}

fn sweep(a: &SweepArgs, out: &mut String) -> Result<()> {
    let inst = load(&a.instance, a.k)?;
    let opts = SweepOptions {
        sweeps_per_us: a.sweeps_per_us,
        ..SweepOptions::default()
    };
    let records = run_sweep(&inst, a.runs, a.seed, &opts)?;
    write_records(&a.out, &records)?;
    let failed = records.iter().filter(|r| r.failed()).count();
    let _ = writeln!(out, "runs: {} ({} failed)", records.len(), failed);
    for (m, n, mean) in method_summary(&records) {
        let _ = writeln!(out, "{m:<8} n={n:<4} mean_coverage={mean:.6}");
    }
    Ok(())
}

fn regress_cmd(a: &RegressArgs, out: &mut String) -> Result<()> {
    let records = read_records(&a.input)?;
    let report = regress(&records)?;
    out.push_str(&report.to_text());
    if let Some(p) = &a.out {
        std::fs::write(p, report.to_csv()).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::domain("x")), 2);
        assert_eq!(exit_code(&Error::format(3, "x")), 2);
        assert_eq!(exit_code(&Error::Infeasible("x".into())), 3);
        let g = Error::GuardExceeded {
            n: 1,
            k: 1,
            count: 1u32.into(),
            limit: 0,
        };
        assert_eq!(exit_code(&g), 4);
    }

    #[test]
    fn zero_satellites_is_a_usage_error() {
        let e = Cli::try_parse_from(["satclique", "generate", "--n-sats", "0", "--max-group", "3", "--out", "x"])
            .unwrap_err();
        assert!(e.use_stderr());
    }

    #[test]
    fn command_line_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
