//! Panel container, integer-part power arithmetic and estimation results.

use ndarray::{Array2, ArrayView1};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An N x T panel: row `i` holds section `i`, column `t` holds time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    data: Array2<f64>,
    section_labels: Option<Vec<String>>,
    time_labels: Option<Vec<String>>,
}

impl Panel {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, t) = data.dim();
        if n < 2 {
            return Err(Error::InvalidPanel(format!("need at least 2 sections, got {n}")));
        }
        if t < 2 {
            return Err(Error::InvalidPanel(format!("need at least 2 periods, got {t}")));
        }
        if let Some(((i, j), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidPanel(format!("non-finite value {v} at section {}, period {}", i + 1, j + 1)));
        }
        Ok(Self { data, section_labels: None, time_labels: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != t) {
            return Err(Error::InvalidPanel(format!("row {} has length {}, expected {t}", bad + 1, rows[bad].len())));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), t), flat).map_err(|e| Error::InvalidPanel(e.to_string()))?;
        Self::new(data)
    }

    pub fn with_section_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::InvalidPanel(format!("{} section labels for {} sections", labels.len(), self.n())));
        }
        self.section_labels = Some(labels);
        Ok(self)
    }

    pub fn with_time_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.t() {
            return Err(Error::InvalidPanel(format!("{} time labels for {} periods", labels.len(), self.t())));
        }
        self.time_labels = Some(labels);
        Ok(self)
    }

    /// Number of sections.
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Number of time periods.
    pub fn t(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    /// Section `i`, zero-based.
    pub fn section(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn section_labels(&self) -> Option<&[String]> {
        self.section_labels.as_deref()
    }

    pub fn time_labels(&self) -> Option<&[String]> {
        self.time_labels.as_deref()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    /// Multiply every entry by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.data * c)
    }
}

/// `[N^a]`: the integer part of `N^a` for `a >= 0`, and `1 / [N^-a]` for `a < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BracketValue {
    Whole(u64),
    Reciprocal(u64),
}

impl BracketValue {
    pub fn as_f64(self) -> f64 {
        match self {
            BracketValue::Whole(k) => k as f64,
            BracketValue::Reciprocal(k) => 1.0 / k as f64,
        }
    }
}

/// A bracketed power `[N^a]` with the composite conventions
/// `[N^{ka}] = [N^a]^k` and `[N^{a-k}] = [N^a] / N^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketPower {
    pub base: u64,
    pub exponent: f64,
}

impl BracketPower {
    pub fn new(base: u64, exponent: f64) -> Self {
        Self { base, exponent }
    }

    pub fn value(&self) -> BracketValue {
        bracket_pow(self.base, self.exponent)
    }

    /// `[N^{ka}]`, taken as `[N^a]^k`.
    pub fn pow_k(&self, k: i32) -> f64 {
        self.value().as_f64().powi(k)
    }

    /// `[N^{a-k}]`, taken as `[N^a] / N^k`.
    pub fn shift(&self, k: i32) -> f64 {
        self.value().as_f64() / (self.base as f64).powi(k)
    }
}

pub fn bracket_pow(n: u64, a: f64) -> BracketValue {
    assert!(n >= 1, "bracket_pow needs N >= 1");
    if a >= 0.0 {
        BracketValue::Whole(floor_pow(n, a))
    } else {
        BracketValue::Reciprocal(floor_pow(n, -a))
    }
}

/// Largest integer `k` with `k <= n^a`, for `a >= 0`.
pub fn floor_pow(n: u64, a: f64) -> u64 {
    assert!(a >= 0.0 && a.is_finite(), "floor_pow needs a finite nonnegative exponent");
    if n == 1 || a == 0.0 {
        return 1;
    }
    let approx = (n as f64).powf(a);
    if let Some((p, q)) = small_rational(a) {
        return exact_floor_root(n, p, q, approx);
    }
    let nearest = approx.round();
    if (approx - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        approx.floor() as u64
    }
}

/// Recovers `a = p/q` when `a` is within rounding of a fraction with a small denominator.
fn small_rational(a: f64) -> Option<(u32, u32)> {
    const MAX_DEN: u32 = 64;
    const MAX_NUM: u32 = 256;
    for q in 1..=MAX_DEN {
        let p = (a * q as f64).round();
        if p > MAX_NUM as f64 {
            return None;
        }
        if (a - p / q as f64).abs() <= 1e-12 * a.max(1.0) {
            return Some((p as u32, q));
        }
    }
    None
}

/// `floor((n^p)^(1/q))` by exact integer comparison around the float estimate.
fn exact_floor_root(n: u64, p: u32, q: u32, approx: f64) -> u64 {
    let target = BigUint::from(n).pow(p);
    let fits = |k: u64| BigUint::from(k).pow(q) <= target;
    let mut k = approx.floor().max(1.0) as u64;
    while !fits(k) {
        k -= 1;
    }
    while fits(k + 1) {
        k += 1;
    }
    k
}

/// `min(cutoff, T - tau)`, the effective sample size of the estimators.
pub fn v_nt(cutoff_n: usize, t: usize, tau: usize) -> Result<usize> {
    if tau >= t {
        return Err(Error::InvalidLag { tau, t });
    }
    Ok(cutoff_n.min(t - tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Marginal,
    Joint,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// The estimate fell outside [0, 1] (marginal estimator only; never clamped).
    pub out_of_range: bool,
    /// kappa computed with the `[N^{4a}]` multiplier on the tail sum instead of `[N^{2a}]`.
    pub kappa_alt: Option<f64>,
    /// The fitted kappa is not positive.
    pub nonpositive_kappa: bool,
    /// The weighted least-squares objective is exactly zero.
    pub perfect_fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub alpha: f64,
    pub kappa: f64,
    pub tau: usize,
    /// The cutoff `[N^alpha]` used.
    pub cutoff_n: usize,
    pub objective_value: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl EstimateResult {
    pub fn v_nt(&self, t: usize) -> Result<usize> {
        v_nt(self.cutoff_n, t, self.tau)
    }
}
