//! Weighted k-clique Hamiltonian over a list of candidate groups.
//!
//! For vertices with coverages `w_i`, maximum coverage `W`, group count `k`
//! and reward constant `A`:
//!
//! ```text
//! h_i  = -A w_i - (2k - (A - 1)) W
//! J_ij = 2W + 2 O_ij (w_i + w_j)      O_ij = 1 iff groups i and j overlap
//! offset = k^2 W
//! ```
//!
//! The `2W` coupling and the `k^2 W` offset come from expanding the
//! cardinality penalty `W (sum x - k)^2`; the overlap term makes choosing two
//! intersecting groups cost more than either contributes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::{Partition, SatSet, Vertex};

pub const DEFAULT_A: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuboParams {
    pub a_const: f64,
    pub k_groups: usize,
    pub max_weight: f64,
}

impl QuboParams {
    /// Parameters for `vertices`, with `W` taken as their largest weight.
    pub fn for_vertices(vertices: &[Vertex], a_const: f64, k_groups: usize) -> Self {
        let max_weight = vertices.iter().map(|v| v.weight).fold(0.0, f64::max);
        QuboParams {
            a_const,
            k_groups,
            max_weight,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.a_const > 0.0) {
            return Err(Error::domain(format!("A must be positive, got {}", self.a_const)));
        }
        if self.k_groups == 0 {
            return Err(Error::domain("k must be at least 1"));
        }
        if !(self.max_weight > 0.0) {
            return Err(Error::domain(format!("W must be positive, got {}", self.max_weight)));
        }
        Ok(())
    }
}

/// Binary quadratic model `offset + sum h_i x_i + sum_{i<j} J_ij x_i x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    pub linear: Vec<f64>,
    /// Upper-triangular couplings keyed by `(i, j)` with `i < j`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    /// Group represented by each variable; empty for free-standing models.
    pub vertex_map: Vec<Vertex>,
    pub params: Option<QuboParams>,
}

pub fn build_qubo(vertices: &[Vertex], params: QuboParams) -> Result<QuboInstance> {
    if vertices.is_empty() {
        return Err(Error::domain("cannot build a QUBO over zero vertices"));
    }
    params.validate()?;
    if let Some(v) = vertices.iter().find(|v| !(v.weight > 0.0 && v.weight <= 1.0)) {
        return Err(Error::domain(format!(
            "vertex {} has weight {} outside (0, 1]",
            v.sats, v.weight
        )));
    }
    let QuboParams {
        a_const: a,
        k_groups,
        max_weight: w_max,
    } = params;
    let k = k_groups as f64;
    let linear = vertices
        .iter()
        .map(|v| -a * v.weight - (2.0 * k - (a - 1.0)) * w_max)
        .collect();
    let mut quadratic = BTreeMap::new();
    for (i, vi) in vertices.iter().enumerate() {
        for (j, vj) in vertices.iter().enumerate().skip(i + 1) {
            let overlap = if vi.sats.is_disjoint(vj.sats) { 0.0 } else { 1.0 };
            let coupling = 2.0 * w_max + 2.0 * overlap * (vi.weight + vj.weight);
            quadratic.insert((i, j), coupling);
        }
    }
    Ok(QuboInstance {
        linear,
        quadratic,
        offset: k * k * w_max,
        vertex_map: vertices.to_vec(),
        params: Some(params),
    })
}

impl QuboInstance {
    /// A model with no vertex mapping, e.g. for solver tests.
    pub fn from_terms(
        linear: Vec<f64>,
        quadratic: BTreeMap<(usize, usize), f64>,
        offset: f64,
    ) -> Result<Self> {
        let n = linear.len();
        if let Some(&(i, j)) = quadratic.keys().find(|&&(i, j)| i >= j || j >= n) {
            return Err(Error::domain(format!(
                "coupling ({i}, {j}) is not upper-triangular within {n} variables"
            )));
        }
        Ok(QuboInstance {
            linear,
            quadratic,
            offset,
            vertex_map: Vec::new(),
            params: None,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn energy(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.n_vars() {
            return Err(Error::domain(format!(
                "state has {} bits but the QUBO has {} variables",
                x.len(),
                self.n_vars()
            )));
        }
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[bool]) -> f64 {
        let mut e = self.offset;
        for (h, _) in self.linear.iter().zip(x).filter(|(_, &b)| b) {
            e += h;
        }
        for (&(i, j), &c) in &self.quadratic {
            if x[i] && x[j] {
                e += c;
            }
        }
        e
    }

    /// Energy scale used to normalize annealing temperatures: `W` for built
    /// models, otherwise the largest coefficient magnitude.
    pub fn energy_scale(&self) -> f64 {
        if let Some(p) = self.params {
            return p.max_weight;
        }
        let m = self
            .linear
            .iter()
            .chain(self.quadratic.values())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    /// Dense symmetric coupling matrix, row-major `n * n`, zero diagonal.
    pub fn dense_couplings(&self) -> Vec<f64> {
        let n = self.n_vars();
        let mut m = vec![0.0; n * n];
        for (&(i, j), &c) in &self.quadratic {
            m[i * n + j] += c;
            m[j * n + i] += c;
        }
        m
    }

    /// Indicator vector of a set of groups over `vertex_map`.
    pub fn indicator(&self, groups: &[SatSet]) -> Result<Vec<bool>> {
        let mut x = vec![false; self.n_vars()];
        for &g in groups {
            let i = self
                .vertex_map
                .iter()
                .position(|v| v.sats == g)
                .ok_or(Error::Mapping(g))?;
            x[i] = true;
        }
        Ok(x)
    }

    /// Groups selected by a state.
    pub fn decode(&self, x: &[bool]) -> Vec<SatSet> {
        self.vertex_map
            .iter()
            .zip(x)
            .filter(|(_, &b)| b)
            .map(|(v, _)| v.sats)
            .collect()
    }

    /// `i,j,value` rows, diagonal rows carrying `h_i`, after one `#` header
    /// line with the offset and the build parameters.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "# offset={}", self.offset);
        if let Some(p) = self.params {
            let _ = write!(out, " A={} k={} W={}", p.a_const, p.k_groups, p.max_weight);
        }
        out.push('\n');
        for (i, h) in self.linear.iter().enumerate() {
            let _ = writeln!(out, "{i},{i},{h}");
        }
        for (&(i, j), c) in &self.quadratic {
            let _ = writeln!(out, "{i},{j},{c}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `energy(p1) - energy(p2)` for two partitions expressed over the QUBO's
/// variables. For two disjoint k-selections this is `-A * (sum w(p1) - sum w(p2))`.
pub fn feasible_energy_gap(q: &QuboInstance, p1: &Partition, p2: &Partition) -> Result<f64> {
    let x1 = q.indicator(&p1.groups)?;
    let x2 = q.indicator(&p2.groups)?;
    Ok(q.energy_unchecked(&x1) - q.energy_unchecked(&x2))
}
