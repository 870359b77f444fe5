//! Simulated-annealing sampler standing in for a quantum annealer.
//!
//! Device knobs map onto the simulation as follows: every repetition is an
//! independent annealing restart; the anneal time sets the number of
//! Metropolis sweeps; spin reversals split the repetitions into batches that
//! each anneal a freshly gauged copy of the problem; the optimize
//! post-processing is a steepest-descent polish of every read. Programming
//! and readout thermalization only contribute to the simulated timing.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::QuboInstance;

/// Metropolis sweeps per microsecond of requested anneal time.
pub const SWEEPS_PER_US: f64 = 20.0;
pub const BETA_HOT: f64 = 0.1;
pub const BETA_COLD: f64 = 10.0;

const GAUGE_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Dw2x,
    Vfyc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PostProc {
    Optimize,
    None,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Dw2x => "DW2X",
            Solver::Vfyc => "VFYC",
        })
    }
}

impl FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DW2X" => Ok(Solver::Dw2x),
            "VFYC" => Ok(Solver::Vfyc),
            _ => Err(Error::domain(format!("unknown solver {s:?}"))),
        }
    }
}

impl fmt::Display for PostProc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PostProc::Optimize => "Optimize",
            PostProc::None => "None",
        })
    }
}

impl FromStr for PostProc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "optimize" => Ok(PostProc::Optimize),
            "none" => Ok(PostProc::None),
            _ => Err(Error::domain(format!("unknown post-processing {s:?}"))),
        }
    }
}

/// Device hyperparameters plus the simulation's effort knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    pub num_reps: u32,
    pub anneal_time_us: u32,
    pub prog_time_us: u32,
    pub read_time_us: u32,
    pub spin_rev: u32,
    pub solver: Solver,
    pub post_proc: PostProc,
    pub seed: u64,
    pub sweeps_per_us: f64,
    pub beta_hot: f64,
    pub beta_cold: f64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            num_reps: 100,
            anneal_time_us: 20,
            prog_time_us: 1000,
            read_time_us: 100,
            spin_rev: 1,
            solver: Solver::Dw2x,
            post_proc: PostProc::Optimize,
            seed: 0,
            sweeps_per_us: SWEEPS_PER_US,
            beta_hot: BETA_HOT,
            beta_cold: BETA_COLD,
        }
    }
}

impl AnnealConfig {
    pub const NUM_REPS: (u32, u32) = (10, 10_000);
    pub const ANNEAL_TIME_US: (u32, u32) = (5, 2000);
    pub const PROG_TIME_US: (u32, u32) = (1, 10_000);
    pub const READ_TIME_US: (u32, u32) = (1, 10_000);

    /// Forces the mandatory optimize pass of the virtual full-yield solver.
    pub fn normalized(mut self) -> Self {
        if self.solver == Solver::Vfyc {
            self.post_proc = PostProc::Optimize;
        }
        self
    }

    /// Structural checks; with `device_ranges` also the device's documented
    /// parameter ranges.
    pub fn validate(&self, device_ranges: bool) -> Result<()> {
        if self.num_reps == 0 {
            return Err(Error::domain("num_reps must be at least 1"));
        }
        if self.spin_rev == 0 || self.spin_rev > self.num_reps {
            return Err(Error::domain(format!(
                "spin_rev must be in 1..={}, got {}",
                self.num_reps, self.spin_rev
            )));
        }
        if self.solver == Solver::Vfyc && self.post_proc != PostProc::Optimize {
            return Err(Error::domain("the VFYC solver requires Optimize post-processing"));
        }
        if !(self.sweeps_per_us > 0.0) || !(self.beta_hot > 0.0) || !(self.beta_cold >= self.beta_hot) {
            return Err(Error::domain("annealing schedule parameters must be positive and increasing"));
        }
        if device_ranges {
            for (name, v, (lo, hi)) in [
                ("num_reps", self.num_reps, Self::NUM_REPS),
                ("anneal_time_us", self.anneal_time_us, Self::ANNEAL_TIME_US),
                ("prog_time_us", self.prog_time_us, Self::PROG_TIME_US),
                ("read_time_us", self.read_time_us, Self::READ_TIME_US),
            ] {
                if !(lo..=hi).contains(&v) {
                    return Err(Error::domain(format!("{name} = {v} outside {lo}..={hi}")));
                }
            }
        } else if self.anneal_time_us == 0 {
            return Err(Error::domain("anneal_time_us must be at least 1"));
        }
        Ok(())
    }

    pub fn sweeps(&self) -> usize {
        ((self.anneal_time_us as f64 * self.sweeps_per_us).round() as usize).max(1)
    }

    /// Repetitions sharing one gauge.
    pub fn gauge_period(&self) -> u32 {
        self.num_reps.div_ceil(self.spin_rev)
    }

    pub fn optimizes(&self) -> bool {
        self.post_proc == PostProc::Optimize || self.solver == Solver::Vfyc
    }
}

/// Simulated device time in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Timing {
    pub anneal_us: u64,
    pub prog_us: u64,
    pub read_us: u64,
    pub wall_us: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub bits: Vec<bool>,
    pub energy: f64,
    pub count: u32,
}

/// Distinct reads sorted by ascending energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub best: usize,
    pub timing: Timing,
}

impl SampleSet {
    pub fn best(&self) -> &Sample {
        &self.samples[self.best]
    }

    pub fn total_reads(&self) -> u64 {
        self.samples.iter().map(|s| s.count as u64).sum()
    }

    /// `energy,count,bits` rows; variable 0 is the rightmost bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy,count,bits\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{}\n", s.energy, s.count, bits_to_string(&s.bits)));
        }
        out
    }
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().rev().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn anneal(q: &QuboInstance, cfg: &AnnealConfig) -> Result<SampleSet> {
    let n = q.n_vars();
    if n == 0 {
        return Err(Error::domain("cannot anneal a QUBO with zero variables"));
    }
    cfg.validate(false)?;
    let scale = q.energy_scale();
    let schedule = Schedule::geometric(cfg.beta_hot / scale, cfg.beta_cold / scale, cfg.sweeps());
    let period = cfg.gauge_period();
    let batches = cfg.num_reps.div_ceil(period);
    let optimize = cfg.optimizes();

    let reads: Vec<Vec<bool>> = (0..batches)
        .into_par_iter()
        .flat_map(|b| {
            let mut grng = ChaCha8Rng::seed_from_u64(cfg.seed);
            grng.set_stream(GAUGE_STREAM_BASE + b as u64);
            let mask: Vec<bool> = (0..n).map(|_| grng.random()).collect();
            let gauged = gauge_transform(q, &mask).expect("mask length matches");
            let model = DenseModel::new(&gauged);
            let first = b * period;
            let last = (first + period).min(cfg.num_reps);
            (first..last)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(r as u64);
                    let mut x = model.anneal(&mut rng, &schedule);
                    for (xi, &m) in x.iter_mut().zip(&mask) {
                        *xi ^= m;
                    }
                    if optimize {
                        x = greedy_descent(q, &x).expect("length matches");
                    }
                    x
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut counts: BTreeMap<Vec<bool>, u32> = BTreeMap::new();
    for x in reads {
        *counts.entry(x).or_default() += 1;
    }
    let mut samples: Vec<Sample> = counts
        .into_iter()
        .map(|(bits, count)| Sample {
            energy: q.energy_unchecked(&bits),
            bits,
            count,
        })
        .collect();
    samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.bits.cmp(&b.bits)));

    let reps = cfg.num_reps as u64;
    let anneal_us = reps * cfg.anneal_time_us as u64;
    let prog_us = batches as u64 * cfg.prog_time_us as u64;
    let read_us = reps * cfg.read_time_us as u64;
    Ok(SampleSet {
        samples,
        best: 0,
        timing: Timing {
            anneal_us,
            prog_us,
            read_us,
            wall_us: anneal_us + prog_us + read_us,
        },
    })
}

struct Schedule {
    betas: Vec<f64>,
}

impl Schedule {
    fn geometric(hot: f64, cold: f64, sweeps: usize) -> Self {
        let betas = if sweeps == 1 {
            vec![cold]
        } else {
            let ratio = (cold / hot).powf(1.0 / (sweeps - 1) as f64);
            (0..sweeps).map(|s| hot * ratio.powi(s as i32)).collect()
        };
        Schedule { betas }
    }
}

/// Linear terms and dense symmetric couplings for fast local-field updates.
struct DenseModel {
    n: usize,
    linear: Vec<f64>,
    couplings: Vec<f64>,
}

impl DenseModel {
    fn new(q: &QuboInstance) -> Self {
        DenseModel {
            n: q.n_vars(),
            linear: q.linear.clone(),
            couplings: q.dense_couplings(),
        }
    }

    fn fields(&self, x: &[bool]) -> Vec<f64> {
        let mut f = self.linear.clone();
        for (j, _) in x.iter().enumerate().filter(|(_, &b)| b) {
            let row = &self.couplings[j * self.n..(j + 1) * self.n];
            for (fi, c) in f.iter_mut().zip(row) {
                *fi += c;
            }
        }
        f
    }

    fn flip(&self, x: &mut [bool], fields: &mut [f64], i: usize) {
        x[i] = !x[i];
        let sign = if x[i] { 1.0 } else { -1.0 };
        let row = &self.couplings[i * self.n..(i + 1) * self.n];
        for (fj, c) in fields.iter_mut().zip(row) {
            *fj += sign * c;
        }
    }

    fn anneal(&self, rng: &mut ChaCha8Rng, schedule: &Schedule) -> Vec<bool> {
        let mut x: Vec<bool> = (0..self.n).map(|_| rng.random()).collect();
        let mut fields = self.fields(&x);
        for &beta in &schedule.betas {
            for i in 0..self.n {
                let delta = if x[i] { -fields[i] } else { fields[i] };
                let accept = delta <= 0.0 || {
                    let t = beta * delta;
                    t < 40.0 && rng.random::<f64>() < (-t).exp()
                };
                if accept {
                    self.flip(&mut x, &mut fields, i);
                }
            }
        }
        x
    }
}

/// Gauge (spin-reversal) transform: variables with `mask[i]` set are
/// replaced by their complement, so `energy(x) == gauged.energy(x ^ mask)`.
/// Applying the same mask twice restores the model.
pub fn gauge_transform(q: &QuboInstance, mask: &[bool]) -> Result<QuboInstance> {
    if mask.len() != q.n_vars() {
        return Err(Error::domain(format!(
            "gauge mask has {} bits but the QUBO has {} variables",
            mask.len(),
            q.n_vars()
        )));
    }
    let mut out = q.clone();
    for (i, &m) in mask.iter().enumerate() {
        if m {
            out.offset += q.linear[i];
            out.linear[i] = -q.linear[i];
        }
    }
    for (&(i, j), &c) in &q.quadratic {
        match (mask[i], mask[j]) {
            (false, false) => {}
            (true, false) => {
                out.linear[j] += c;
                out.quadratic.insert((i, j), -c);
            }
            (false, true) => {
                out.linear[i] += c;
                out.quadratic.insert((i, j), -c);
            }
            (true, true) => {
                out.offset += c;
                out.linear[i] -= c;
                out.linear[j] -= c;
            }
        }
    }
    Ok(out)
}

/// Steepest single-flip descent to a local minimum; ties go to the lowest
/// index.
pub fn greedy_descent(q: &QuboInstance, x: &[bool]) -> Result<Vec<bool>> {
    if x.len() != q.n_vars() {
        return Err(Error::domain(format!(
            "state has {} bits but the QUBO has {} variables",
            x.len(),
            q.n_vars()
        )));
    }
    let model = DenseModel::new(q);
    let tol = 1e-12 * q.energy_scale();
    let mut x = x.to_vec();
    let mut fields = model.fields(&x);
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..model.n {
            let delta = if x[i] { -fields[i] } else { fields[i] };
            if delta < -tol && best.is_none_or(|(_, d)| delta < d) {
                best = Some((i, delta));
            }
        }
        match best {
            Some((i, _)) => model.flip(&mut x, &mut fields, i),
            None => return Ok(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn random_qubo(n: usize, seed: u64) -> QuboInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let linear = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut quadratic = BTreeMap::new();
        for i in 0..n {
            for j in i + 1..n {
                quadratic.insert((i, j), rng.random_range(-1.0..1.0));
            }
        }
        QuboInstance::from_terms(linear, quadratic, rng.random_range(-1.0..1.0)).unwrap()
    }

    fn exhaustive_min(q: &QuboInstance) -> f64 {
        let n = q.n_vars();
        (0..1u32 << n)
            .map(|b| {
                let x: Vec<bool> = (0..n).map(|i| b >> i & 1 == 1).collect();
                q.energy(&x).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn single_variable_minimum() {
        let q = QuboInstance::from_terms(vec![-1.0], BTreeMap::new(), 0.5).unwrap();
        let s = anneal(&q, &AnnealConfig::default()).unwrap();
        assert_eq!(s.best().bits, vec![true]);
        assert_eq!(s.best().energy, -0.5);
        assert_eq!(greedy_descent(&q, &[false]).unwrap(), vec![true]);
    }

    #[test]
    fn zero_variables_rejected() {
        let q = QuboInstance::from_terms(vec![], BTreeMap::new(), 0.0).unwrap();
        assert!(matches!(anneal(&q, &AnnealConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn sample_set_invariants() {
        let q = random_qubo(10, 3);
        let cfg = AnnealConfig { num_reps: 57, spin_rev: 5, post_proc: PostProc::None, ..Default::default() };
        let s = anneal(&q, &cfg).unwrap();
        assert_eq!(s.total_reads(), 57);
        assert!(s.samples.windows(2).all(|w| w[0].energy <= w[1].energy));
        for smp in &s.samples {
            assert!((q.energy(&smp.bits).unwrap() - smp.energy).abs() < 1e-9);
        }
        assert_eq!(s, anneal(&q, &cfg).unwrap());
        assert_eq!(s.timing.prog_us, 5 * 1000);
        assert_eq!(s.timing.anneal_us, 57 * 20);
    }

    #[test]
    fn finds_exhaustive_minimum() {
        let q = random_qubo(12, 11);
        let s = anneal(&q, &AnnealConfig { seed: 4, ..Default::default() }).unwrap();
        assert!((s.best().energy - exhaustive_min(&q)).abs() < 1e-9);
    }

    #[test]
    fn optimize_never_hurts() {
        for seed in 0..10 {
            let q = random_qubo(14, 100 + seed);
            let base = AnnealConfig { seed, anneal_time_us: 5, num_reps: 20, ..Default::default() };
            let raw = anneal(&q, &AnnealConfig { post_proc: PostProc::None, ..base.clone() }).unwrap();
            let opt = anneal(&q, &base).unwrap();
            assert!(opt.best().energy <= raw.best().energy + 1e-12);
        }
    }

    #[test]
    fn vfyc_forces_optimize() {
        let cfg = AnnealConfig { solver: Solver::Vfyc, post_proc: PostProc::None, ..Default::default() };
        assert!(cfg.validate(true).is_err());
        let n = cfg.normalized();
        assert_eq!(n.post_proc, PostProc::Optimize);
        assert!(n.validate(true).is_ok());
    }

    #[test]
    fn config_ranges() {
        let ok = AnnealConfig::default();
        assert!(ok.validate(true).is_ok());
        assert!(AnnealConfig { spin_rev: 101, ..ok.clone() }.validate(false).is_err());
        assert!(AnnealConfig { anneal_time_us: 4, ..ok.clone() }.validate(true).is_err());
        assert!(AnnealConfig { anneal_time_us: 4, ..ok.clone() }.validate(false).is_ok());
        assert_eq!(AnnealConfig { anneal_time_us: 5, ..ok.clone() }.sweeps(), 100);
        assert_eq!(AnnealConfig { anneal_time_us: 2000, ..ok.clone() }.sweeps(), 40_000);
        assert_eq!(AnnealConfig { num_reps: 10, spin_rev: 3, ..ok }.gauge_period(), 4);
    }

    #[test]
    fn gauge_identity_and_involution() {
        let q = random_qubo(9, 5);
        assert_eq!(gauge_transform(&q, &[false; 9]).unwrap(), q);
        assert!(gauge_transform(&q, &[true; 3]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mask: Vec<bool> = (0..9).map(|_| rng.random()).collect();
            let back = gauge_transform(&gauge_transform(&q, &mask).unwrap(), &mask).unwrap();
            assert!((back.offset - q.offset).abs() < 1e-12);
            for (a, b) in back.linear.iter().zip(&q.linear) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in back.quadratic.values().zip(q.quadratic.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn descent_reaches_local_minimum() {
        let q = random_qubo(12, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: Vec<bool> = (0..12).map(|_| rng.random()).collect();
            let y = greedy_descent(&q, &x).unwrap();
            let ey = q.energy(&y).unwrap();
            assert!(ey <= q.energy(&x).unwrap() + 1e-12);
            // no single flip improves, and descent from a minimum is a no-op
            for i in 0..12 {
                let mut z = y.clone();
                z[i] = !z[i];
                assert!(q.energy(&z).unwrap() >= ey - 1e-9);
            }
            assert_eq!(greedy_descent(&q, &y).unwrap(), y);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn gauge_preserves_energy(seed in any::<u64>(), n in 1usize..12) {
                let q = random_qubo(n, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
                let mask: Vec<bool> = (0..n).map(|_| rng.random()).collect();
                let x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
                let g = gauge_transform(&q, &mask).unwrap();
                let xg: Vec<bool> = x.iter().zip(&mask).map(|(a, b)| a ^ b).collect();
                prop_assert!((q.energy(&x).unwrap() - g.energy(&xg).unwrap()).abs() < 1e-9);
            }
        }
    }
}
