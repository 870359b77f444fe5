//! Picks a small, annealer-sized subset of candidate groups.
//!
//! All three selectors split their budget evenly over group sizes so that
//! small groups, which are a small share of the enumeration, stay
//! represented. The genetic selector instead evolves whole partitions and
//! keeps the groups that occur most often in its final population.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{mean_coverage, ProblemInstance, SatSet, Vertex};
use crate::repair::repair_groups;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Genetic,
    Random,
    Prune,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Genetic, Method::Random, Method::Prune];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Genetic => "Genetic",
            Method::Random => "Random",
            Method::Prune => "Prune",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "genetic" => Ok(Method::Genetic),
            "random" => Ok(Method::Random),
            "prune" => Ok(Method::Prune),
            _ => Err(Error::domain(format!("unknown preprocessing method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub num_gen: u32,
    pub pop_size: u32,
    pub mut_rate: f64,
}

impl GaConfig {
    pub const NUM_GEN: (u32, u32) = (10, 1000);
    pub const POP_SIZE: (u32, u32) = (10, 1000);
    pub const MUT_RATE: (f64, f64) = (0.01, 0.25);
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub method: Method,
    pub num_nodes: usize,
    pub largest_group: usize,
    pub ga: Option<GaConfig>,
    pub seed: u64,
}

impl PreprocessConfig {
    pub const NUM_NODES: (usize, usize) = (30, 49);
    pub const LARGEST_GROUP: (usize, usize) = (4, 7);

    /// `ga` must be present exactly for the genetic method. With
    /// `table_ranges` every numeric field must also lie in its documented
    /// hyperparameter range.
    pub fn validate(&self, table_ranges: bool) -> Result<()> {
        match (self.method, &self.ga) {
            (Method::Genetic, None) => {
                return Err(Error::domain("the genetic method needs GA parameters"))
            }
            (Method::Random | Method::Prune, Some(_)) => {
                return Err(Error::domain(format!(
                    "GA parameters given for the {} method",
                    self.method
                )))
            }
            _ => {}
        }
        if self.num_nodes == 0 || self.largest_group == 0 {
            return Err(Error::domain("num_nodes and largest_group must be positive"));
        }
        if let Some(ga) = &self.ga {
            if ga.pop_size == 0 || !(0.0..=1.0).contains(&ga.mut_rate) {
                return Err(Error::domain("pop_size must be positive and mut_rate in [0, 1]"));
            }
        }
        if table_ranges {
            let in_range = |v: usize, (lo, hi): (usize, usize)| (lo..=hi).contains(&v);
            if !in_range(self.num_nodes, Self::NUM_NODES) {
                return Err(Error::domain(format!("num_nodes {} outside 30..=49", self.num_nodes)));
            }
            if !in_range(self.largest_group, Self::LARGEST_GROUP) {
                return Err(Error::domain(format!(
                    "largest_group {} outside 4..=7",
                    self.largest_group
                )));
            }
            if let Some(ga) = &self.ga {
                let (g, p, m) = (GaConfig::NUM_GEN, GaConfig::POP_SIZE, GaConfig::MUT_RATE);
                if !(g.0..=g.1).contains(&ga.num_gen)
                    || !(p.0..=p.1).contains(&ga.pop_size)
                    || !(m.0..=m.1).contains(&ga.mut_rate)
                {
                    return Err(Error::domain(format!("GA parameters {ga:?} out of range")));
                }
            }
        }
        Ok(())
    }
}

/// Best-individual fitness per generation and the number of fitness
/// evaluations spent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaTrace {
    pub best_fitness: Vec<f64>,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Selected vertices, ascending by mask.
    pub vertices: Vec<Vertex>,
    /// Fewer than `num_nodes` candidates existed; every candidate was taken.
    pub short: bool,
    pub ga: Option<GaTrace>,
}

pub fn select(inst: &ProblemInstance, vertices: &[Vertex], cfg: &PreprocessConfig) -> Result<Selection> {
    cfg.validate(false)?;
    match cfg.method {
        Method::Random => Ok(select_random(vertices, cfg)),
        Method::Prune => Ok(select_prune(vertices, cfg)),
        Method::Genetic => select_genetic(inst, vertices, cfg),
    }
}

/// Candidates grouped by size, smallest size first, each bucket ascending by
/// mask. Sizes above `largest_group` are ignored.
fn buckets(vertices: &[Vertex], largest_group: usize) -> Vec<Vec<Vertex>> {
    let eligible = vertices.iter().filter(|v| v.sats.len() <= largest_group);
    let Some(smallest) = eligible.clone().map(|v| v.sats.len()).min() else {
        return Vec::new();
    };
    let mut out = vec![Vec::new(); largest_group - smallest + 1];
    for v in eligible {
        out[v.sats.len() - smallest].push(*v);
    }
    for b in &mut out {
        b.sort_unstable_by_key(|v| v.sats);
    }
    out
}

/// Splits `num_nodes` evenly across buckets, remainder to the smallest sizes.
/// Quota a bucket cannot fill moves, one slot at a time and smallest sizes
/// first, to buckets with room. Returns the quotas and whether the total
/// still fell short.
pub fn quotas(num_nodes: usize, capacities: &[usize]) -> (Vec<usize>, bool) {
    let b = capacities.len();
    if b == 0 {
        return (Vec::new(), num_nodes > 0);
    }
    let (base, rem) = (num_nodes / b, num_nodes % b);
    let mut q: Vec<usize> = (0..b).map(|i| base + usize::from(i < rem)).collect();
    let mut shortfall = 0;
    for (qi, &cap) in q.iter_mut().zip(capacities) {
        if *qi > cap {
            shortfall += *qi - cap;
            *qi = cap;
        }
    }
    while shortfall > 0 {
        let mut moved = false;
        for (qi, &cap) in q.iter_mut().zip(capacities) {
            if shortfall > 0 && *qi < cap {
                *qi += 1;
                shortfall -= 1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    (q, shortfall > 0)
}

pub fn select_random(vertices: &[Vertex], cfg: &PreprocessConfig) -> Selection {
    let buckets = buckets(vertices, cfg.largest_group);
    let caps: Vec<usize> = buckets.iter().map(Vec::len).collect();
    let (quota, short) = quotas(cfg.num_nodes, &caps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.num_nodes);
    for (bucket, &q) in buckets.iter().zip(&quota) {
        let mut picks = index::sample(&mut rng, bucket.len(), q).into_vec();
        picks.sort_unstable();
        out.extend(picks.into_iter().map(|i| bucket[i]));
    }
    finish(out, short, None)
}

pub fn select_prune(vertices: &[Vertex], cfg: &PreprocessConfig) -> Selection {
    let (picks, short) = prune_ranked(vertices, cfg);
    finish(picks, short, None)
}

/// Prune picks ordered by descending weight, ties by ascending mask.
fn prune_ranked(vertices: &[Vertex], cfg: &PreprocessConfig) -> (Vec<Vertex>, bool) {
    let mut buckets = buckets(vertices, cfg.largest_group);
    let caps: Vec<usize> = buckets.iter().map(Vec::len).collect();
    let (quota, short) = quotas(cfg.num_nodes, &caps);
    let mut out = Vec::with_capacity(cfg.num_nodes);
    for (bucket, &q) in buckets.iter_mut().zip(&quota) {
        bucket.sort_by(by_weight_then_mask);
        out.extend_from_slice(&bucket[..q]);
    }
    out.sort_by(by_weight_then_mask);
    (out, short)
}

fn by_weight_then_mask(a: &Vertex, b: &Vertex) -> std::cmp::Ordering {
    b.weight.total_cmp(&a.weight).then(a.sats.cmp(&b.sats))
}

fn finish(mut vertices: Vec<Vertex>, short: bool, ga: Option<GaTrace>) -> Selection {
    vertices.sort_unstable_by_key(|v| v.sats);
    Selection { vertices, short, ga }
}

#[derive(Clone)]
struct Individual {
    groups: Vec<SatSet>,
    fitness: f64,
}

struct Population<'a> {
    inst: &'a ProblemInstance,
    /// Group sizes that can become annealer nodes.
    sizes: std::ops::RangeInclusive<usize>,
    evaluations: u64,
}

impl Population<'_> {
    /// Mean coverage of the repaired partition, where a group whose size is
    /// not a candidate size scores zero.
    fn evaluate(&mut self, groups: Vec<SatSet>) -> Result<Individual> {
        let p = repair_groups(groups, self.inst)?;
        self.evaluations += 1;
        let fitness = mean_coverage(&p.groups, |g| {
            if self.sizes.contains(&g.len()) {
                self.inst.coverage(g)
            } else {
                Ok(0.0)
            }
        })?;
        Ok(Individual {
            groups: p.groups,
            fitness,
        })
    }
}

fn tournament<'p>(pop: &'p [Individual], rng: &mut ChaCha8Rng) -> &'p Individual {
    const SIZE: usize = 3;
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..SIZE {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.fitness > best.fitness {
            best = c;
        }
    }
    best
}

fn fittest(pop: &[Individual]) -> &Individual {
    pop.iter()
        .reduce(|a, b| if b.fitness > a.fitness { b } else { a })
        .expect("population is nonempty")
}

/// Genetic preprocessing. Individuals are full partitions into `k_groups`
/// groups, kept legal by repairing every offspring; groups of a size that
/// cannot become a node add nothing to fitness. Selection is a size-3
/// tournament, crossover swaps whole groups after a random cut point,
/// mutation moves one satellite to another group, and the best individual
/// always survives.
pub fn select_genetic(
    inst: &ProblemInstance,
    vertices: &[Vertex],
    cfg: &PreprocessConfig,
) -> Result<Selection> {
    let ga = cfg
        .ga
        .ok_or_else(|| Error::domain("the genetic method needs GA parameters"))?;
    let (n, k) = (inst.n_sats, inst.k_groups);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ctx = Population {
        inst,
        sizes: inst.min_group..=cfg.largest_group,
        evaluations: 0,
    };

    let mut pop = Vec::with_capacity(ga.pop_size as usize);
    for _ in 0..ga.pop_size {
        let mut groups = vec![SatSet::EMPTY; k];
        for s in 1..=n {
            let g = rng.random_range(0..k);
            groups[g] = groups[g].with(s);
        }
        pop.push(ctx.evaluate(groups)?);
    }

    let mut trace = GaTrace::default();
    trace.best_fitness.push(fittest(&pop).fitness);
    for _ in 0..ga.num_gen {
        let mut next = Vec::with_capacity(pop.len());
        next.push(fittest(&pop).clone());
        while next.len() < pop.len() {
            let a = tournament(&pop, &mut rng);
            let b = tournament(&pop, &mut rng);
            let cut = if k > 1 { rng.random_range(1..k) } else { 1 };
            let mut child: Vec<SatSet> = a.groups[..cut].iter().chain(&b.groups[cut..]).copied().collect();
            if rng.random::<f64>() < ga.mut_rate && k > 1 {
                let s = rng.random_range(1..=n);
                let from = child.iter().position(|g| g.contains(s));
                let mut to = rng.random_range(0..k - 1);
                if from.is_some_and(|f| to >= f) {
                    to += 1;
                }
                for g in child.iter_mut() {
                    *g = g.without(s);
                }
                child[to] = child[to].with(s);
            }
            next.push(ctx.evaluate(child)?);
        }
        pop = next;
        trace.best_fitness.push(fittest(&pop).fitness);
    }
    trace.evaluations = ctx.evaluations;

    let by_set: HashMap<SatSet, Vertex> = vertices
        .iter()
        .filter(|v| v.sats.len() <= cfg.largest_group)
        .map(|v| (v.sats, *v))
        .collect();
    let mut freq: HashMap<SatSet, u32> = HashMap::new();
    for ind in &pop {
        for g in &ind.groups {
            if by_set.contains_key(g) {
                *freq.entry(*g).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(Vertex, u32)> = freq.into_iter().map(|(g, c)| (by_set[&g], c)).collect();
    ranked.sort_by(|(va, ca), (vb, cb)| cb.cmp(ca).then_with(|| by_weight_then_mask(va, vb)));
    let mut chosen: Vec<Vertex> = ranked.into_iter().take(cfg.num_nodes).map(|(v, _)| v).collect();

    let mut short = false;
    if chosen.len() < cfg.num_nodes {
        let (pad, prune_short) = prune_ranked(vertices, cfg);
        for v in pad {
            if chosen.len() == cfg.num_nodes {
                break;
            }
            if !chosen.iter().any(|c| c.sats == v.sats) {
                chosen.push(v);
            }
        }
        short = prune_short && chosen.len() < cfg.num_nodes;
    }
    Ok(finish(chosen, short, Some(trace)))
}
