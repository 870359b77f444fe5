//! End-to-end solve: preprocess, build the QUBO, anneal, repair, score.

use crate::anneal::{anneal, AnnealConfig, SampleSet};
use crate::error::{Error, Result};
use crate::preprocess::{select, PreprocessConfig, Selection};
use crate::problem::{Partition, ProblemInstance, Vertex};
use crate::qubo::{build_qubo, QuboInstance, QuboParams};
use crate::repair::repair;

/// Simulated microseconds charged per unit of classical work (one GA fitness
/// evaluation or the final repair).
pub const CLASSICAL_US_PER_UNIT: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub anneal: AnnealConfig,
    pub a_const: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub partition: Partition,
    /// Mean coverage of `partition`.
    pub coverage: f64,
    /// Energy of the lowest-energy read, before repair.
    pub energy: f64,
    pub selection: Selection,
    pub qubo: QuboInstance,
    pub samples: SampleSet,
    pub anneal_time_total_us: u64,
    pub total_time_us: u64,
}

/// Runs the full pipeline over `vertices`, the candidate groups of `inst`.
///
/// The lowest-energy read is repaired into a legal partition and scored.
pub fn run_pipeline(
    inst: &ProblemInstance,
    vertices: &[Vertex],
    cfg: &PipelineConfig,
) -> Result<PipelineOutcome> {
    let selection = select(inst, vertices, &cfg.preprocess)?;
    if selection.vertices.is_empty() {
        return Err(Error::Infeasible("preprocessing selected no groups".into()));
    }
    let params = QuboParams::for_vertices(&selection.vertices, cfg.a_const, inst.k_groups);
    let qubo = build_qubo(&selection.vertices, params)?;
    let samples = anneal(&qubo, &cfg.anneal)?;

    let best = samples.best();
    let partition = repair(&best.bits, &qubo, inst)?;
    let coverage = inst.partition_coverage(&partition)?;
    let energy = best.energy;

    let t = samples.timing;
    let ga_units = selection.ga.as_ref().map_or(0, |g| g.evaluations);
    let classical = (ga_units + 1) * CLASSICAL_US_PER_UNIT;
    Ok(PipelineOutcome {
        partition,
        coverage,
        energy,
        anneal_time_total_us: t.anneal_us,
        total_time_us: t.wall_us + classical,
        selection,
        qubo,
        samples,
    })
}
