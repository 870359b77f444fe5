//! Ordinary least squares on the sweep results.
//!
//! The design matrix is factored column by column with modified Gram-Schmidt
//! (two passes). A column whose residual norm falls below `ALIAS_TOL` of its
//! own norm is linearly dependent on the columns before it and is reported
//! as aliased instead of being fitted.

use std::fmt::{self, Write as _};

use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::SweepRecord;
use crate::anneal::{PostProc, Solver};
use crate::error::{Error, Result};
use crate::preprocess::Method;

pub const ALIAS_TOL: f64 = 1e-7;

/// Significance bands for two-sided p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Significance {
    P001,
    P01,
    P05,
    P1,
    None,
}

impl Significance {
    pub fn from_p(p: f64) -> Self {
        match p {
            p if p < 0.001 => Significance::P001,
            p if p < 0.01 => Significance::P01,
            p if p < 0.05 => Significance::P05,
            p if p < 0.1 => Significance::P1,
            _ => Significance::None,
        }
    }

    pub fn stars(self) -> &'static str {
        match self {
            Significance::P001 => "***",
            Significance::P01 => "**",
            Significance::P05 => "*",
            Significance::P1 => ".",
            Significance::None => "",
        }
    }

    /// The threshold the p-value falls under, empty when none.
    pub fn label(self) -> &'static str {
        match self {
            Significance::P001 => "0.001",
            Significance::P01 => "0.01",
            Significance::P05 => "0.05",
            Significance::P1 => "0.1",
            Significance::None => "",
        }
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientFit {
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

impl CoefficientFit {
    pub fn significance(&self) -> Significance {
        Significance::from_p(self.p_value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub name: String,
    /// `None` when the column was aliased.
    pub fit: Option<CoefficientFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionReport {
    pub coefficients: Vec<Coefficient>,
    pub aliased: Vec<String>,
    pub n_obs: usize,
    /// Records left out because their run failed.
    pub n_failed: usize,
    pub residual_df: usize,
    pub residual_std_error: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    /// Numerator degrees of freedom of the F-statistic.
    pub f_df: usize,
    pub f_p_value: f64,
    pub residuals: Vec<f64>,
}

impl RegressionReport {
    pub fn get(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|c| c.fit).map(|f| f.estimate)
    }

    /// Aligned text table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Residual standard error: {:.4e} on {} degrees of freedom",
            self.residual_std_error, self.residual_df
        );
        let _ = writeln!(
            out,
            "Multiple R-squared: {:.4}, Adjusted R-squared: {:.4}",
            self.r_squared, self.adj_r_squared
        );
        let _ = writeln!(
            out,
            "F-statistic: {:.4} on {} and {} DF, p-value: {:.3e}",
            self.f_statistic, self.f_df, self.residual_df, self.f_p_value
        );
        let _ = writeln!(out, "Observations: {} ({} failed runs excluded)", self.n_obs, self.n_failed);
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<14} {:>11} {:>11} {:>9} {:>10} {:>6}",
            "VarName", "Estimate", "Std. Error", "t value", "Pr(>|t|)", "Sig."
        );
        for c in &self.coefficients {
            match c.fit {
                Some(f) => {
                    let _ = writeln!(
                        out,
                        "{:<14} {:>11.3e} {:>11.3e} {:>9.3} {:>10.3e} {:>6}",
                        c.name,
                        f.estimate,
                        f.std_error,
                        f.t_value,
                        f.p_value,
                        f.significance().label()
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:<14} {:>11} {:>11} {:>9} {:>10} {:>6}",
                        c.name, "NA", "NA", "NA", "NA", ""
                    );
                }
            }
        }
        if !self.aliased.is_empty() {
            let _ = writeln!(out, "\nNA: not defined due to singularity ({})", self.aliased.join(", "));
        }
        out
    }

    /// Machine-readable twin of `to_text`: one row per coefficient.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,estimate,std_error,t_value,p_value,significance\n");
        for c in &self.coefficients {
            match c.fit {
                Some(f) => {
                    let _ = writeln!(
                        out,
                        "{},{:e},{:e},{:e},{:e},{}",
                        c.name,
                        f.estimate,
                        f.std_error,
                        f.t_value,
                        f.p_value,
                        f.significance().label()
                    );
                }
                None => {
                    let _ = writeln!(out, "{},NA,NA,NA,NA,", c.name);
                }
            }
        }
        out
    }
}

/// Column names of the sweep design matrix, after the intercept. The Random
/// and VFYC indicators are included on purpose: with an intercept they are
/// collinear with the other levels and come out aliased.
pub const SWEEP_COLUMNS: [&str; 16] = [
    "Prune",
    "Genetic",
    "Random",
    "NumGen",
    "PopSize",
    "MutRate",
    "NumNodes",
    "LargestGroup",
    "NumReps",
    "AnnealTime",
    "ProgTime",
    "ReadTime",
    "SpinReverse",
    "DW2X",
    "VFYC",
    "Optimize",
];

fn design_row(r: &SweepRecord) -> [f64; 16] {
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    // GA settings are structurally missing for other methods; coded as zero
    let (g, p, m) = r.ga.map_or((0.0, 0.0, 0.0), |ga| {
        (ga.num_gen as f64, ga.pop_size as f64, ga.mut_rate)
    });
    [
        ind(r.method == Method::Prune),
        ind(r.method == Method::Genetic),
        ind(r.method == Method::Random),
        g,
        p,
        m,
        r.num_nodes as f64,
        r.largest_group as f64,
        r.num_reps as f64,
        r.anneal_time_us as f64,
        r.prog_time_us as f64,
        r.read_time_us as f64,
        r.spin_rev as f64,
        ind(r.solver == Solver::Dw2x),
        ind(r.solver == Solver::Vfyc),
        ind(r.post_proc == PostProc::Optimize),
    ]
}

/// Regresses coverage on every hyperparameter. Failed runs are dropped.
pub fn regress(records: &[SweepRecord]) -> Result<RegressionReport> {
    let ok: Vec<&SweepRecord> = records.iter().filter(|r| !r.failed()).collect();
    let mut columns = vec![Vec::with_capacity(ok.len()); SWEEP_COLUMNS.len()];
    let mut y = Vec::with_capacity(ok.len());
    for r in &ok {
        for (col, v) in columns.iter_mut().zip(design_row(r)) {
            col.push(v);
        }
        y.push(r.outcome.map_or(f64::NAN, |o| o.coverage));
    }
    let named: Vec<(String, Vec<f64>)> = SWEEP_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .zip(columns)
        .collect();
    let mut report = ols(&named, &y, true)?;
    report.n_failed = records.len() - ok.len();
    Ok(report)
}

/// Least-squares fit of `y` on the named columns, with an optional leading
/// intercept. Needs at least two more observations than columns.
pub fn ols(columns: &[(String, Vec<f64>)], y: &[f64], intercept: bool) -> Result<RegressionReport> {
    let n = y.len();
    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    if intercept {
        names.push("(Intercept)".to_string());
        cols.push(vec![1.0; n]);
    }
    for (name, c) in columns {
        if c.len() != n {
            return Err(Error::domain(format!("column {name} has {} rows, expected {n}", c.len())));
        }
        names.push(name.clone());
        cols.push(c.clone());
    }
    if n < cols.len() + 2 {
        return Err(Error::domain(format!(
            "{n} observations are too few for {} variables",
            cols.len()
        )));
    }
    if y.iter().chain(cols.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::domain("regression data contains a non-finite value"));
    }

    // q holds the orthonormal basis; r[j] the coefficients of kept column j
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for (j, x) in cols.iter().enumerate() {
        let x_norm = norm(x);
        let mut v = x.clone();
        let mut coef = vec![0.0; q.len()];
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let d = dot(qi, &v);
                coef[i] += d;
                axpy(-d, qi, &mut v);
            }
        }
        let v_norm = norm(&v);
        if x_norm == 0.0 || v_norm <= ALIAS_TOL * x_norm {
            continue;
        }
        v.iter_mut().for_each(|e| *e /= v_norm);
        coef.push(v_norm);
        q.push(v);
        r.push(coef);
        kept.push(j);
    }

    let p = kept.len();
    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, y)).collect();
    // back substitution: R beta = Q'y, with R stored by column
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for j in i + 1..p {
            s -= r[j][i] * beta[j];
        }
        beta[i] = s / r[i][i];
    }
    let mut residuals = y.to_vec();
    for (qi, &c) in q.iter().zip(&qty) {
        axpy(-c, qi, &mut residuals);
    }
    let ssr = dot(&residuals, &residuals);
    let df = n - p;
    let sigma2 = ssr / df as f64;

    // R^{-1}, upper triangular, stored by column like r
    let mut rinv = vec![vec![0.0; p]; p];
    for j in 0..p {
        rinv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for (l, rl) in r.iter().enumerate().take(j + 1).skip(i + 1) {
                s += rl[i] * rinv[j][l];
            }
            rinv[j][i] = -s / r[i][i];
        }
    }
    let t_dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::domain(e.to_string()))?;

    let mut fits: Vec<Option<CoefficientFit>> = vec![None; cols.len()];
    for (slot, &j) in kept.iter().enumerate() {
        // Var(beta_slot) = sigma^2 * sum over row `slot` of R^{-1} squared
        let row_sq: f64 = (slot..p).map(|c| rinv[c][slot].powi(2)).sum();
        let se = (sigma2 * row_sq).sqrt();
        let t = beta[slot] / se;
        let p_value = if t.is_nan() { f64::NAN } else { (2.0 * t_dist.sf(t.abs())).min(1.0) };
        fits[j] = Some(CoefficientFit {
            estimate: beta[slot],
            std_error: se,
            t_value: t,
            p_value,
        });
    }

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let sst = if intercept {
        y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>()
    } else {
        dot(y, y)
    };
    let r_squared = 1.0 - ssr / sst;
    let model_df = p - usize::from(intercept && kept.first() == Some(&0));
    let denom_n = if intercept { n - 1 } else { n };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * denom_n as f64 / df as f64;
    let (f_statistic, f_p_value) = if model_df == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let f = ((sst - ssr) / model_df as f64) / sigma2;
        let dist = FisherSnedecor::new(model_df as f64, df as f64).map_err(|e| Error::domain(e.to_string()))?;
        (f, dist.sf(f))
    };

    let coefficients: Vec<Coefficient> = names
        .into_iter()
        .zip(fits)
        .map(|(name, fit)| Coefficient { name, fit })
        .collect();
    let aliased = coefficients
        .iter()
        .filter(|c| c.fit.is_none())
        .map(|c| c.name.clone())
        .collect();
    Ok(RegressionReport {
        coefficients,
        aliased,
        n_obs: n,
        n_failed: 0,
        residual_df: df,
        residual_std_error: sigma2.sqrt(),
        r_squared,
        adj_r_squared,
        f_statistic,
        f_df: model_df,
        f_p_value,
        residuals,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
