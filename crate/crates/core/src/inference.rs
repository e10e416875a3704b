//! Plug-in asymptotic variance and confidence intervals for the exponent.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::cutoff_for_alpha;
use crate::moments::{check_cutoff, check_lag, partial_mean, per_time_products, section_cov_with};
use crate::panel::{floor_pow, v_nt, Panel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    /// Cross-sectional part: `4 v / n` times the variance of the section covariances.
    pub part1: f64,
    /// Time-series part: `v / (T - tau)` times the truncated long-run variance.
    pub part2: f64,
    pub total: f64,
    pub truncation_ell: usize,
    pub cutoff_n: usize,
    pub v_nt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub z_quantile: f64,
    /// Asymmetric bounds from inverting the limit law of `kappa v^{1/2} (N^{2(a - a0)} - 1)`
    /// directly; `None` when either log argument is not positive.
    pub inverted: Option<(f64, f64)>,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Default truncation lag `floor((T - tau)^{1/3})`, capped to the admissible range.
pub fn default_ell(t: usize, tau: usize) -> usize {
    let len = t - tau;
    let ell = floor_pow(len as u64, 1.0 / 3.0) as usize;
    ell.min(len.saturating_sub(2))
}

pub fn sigma_part1(panel: &Panel, cutoff_n: usize, tau: usize) -> Result<f64> {
    check_cutoff(panel, cutoff_n)?;
    if cutoff_n < 2 {
        return Err(Error::DegenerateVariance(cutoff_n));
    }
    check_lag(panel.t(), tau)?;
    let xbar = partial_mean(panel, cutoff_n)?.values;
    let covs: Vec<f64> = (0..cutoff_n).map(|i| section_cov_with(&panel.section(i).to_vec(), &xbar, tau)).collect();
    let n = cutoff_n as f64;
    let m = covs.iter().sum::<f64>() / n;
    let var = covs.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n - 1.0);
    let v = v_nt(cutoff_n, panel.t(), tau)? as f64;
    Ok(4.0 * v / n * var)
}

/// Truncated long-run variance of the per-time products, rectangular weights.
pub(crate) fn truncated_lrv(products: &[f64], ell: usize) -> f64 {
    let len = products.len();
    let m = products.iter().sum::<f64>() / len as f64;
    let dev: Vec<f64> = products.iter().map(|p| p - m).collect();
    let mut s = dev.iter().map(|d| d * d).sum::<f64>() / (len - 1) as f64;
    for j in 1..=ell {
        let acc: f64 = dev[..len - j].iter().zip(&dev[j..]).map(|(a, b)| a * b).sum();
        s += 2.0 / (len - j) as f64 * acc;
    }
    s
}

pub fn sigma_part2(panel: &Panel, cutoff_n: usize, tau: usize, ell: usize) -> Result<f64> {
    check_cutoff(panel, cutoff_n)?;
    check_lag(panel.t(), tau)?;
    let len = panel.t() - tau;
    if ell + 2 > len {
        return Err(Error::InvalidTruncation { ell, max: len - 2 });
    }
    let prods = per_time_products(panel, cutoff_n, tau)?;
    let v = v_nt(cutoff_n, panel.t(), tau)? as f64;
    Ok(v / len as f64 * truncated_lrv(&prods, ell))
}

/// Variance estimate at an explicit cutoff `n`.
pub fn sigma_tau_sq_at(panel: &Panel, cutoff_n: usize, tau: usize, ell: Option<usize>) -> Result<VarianceEstimate> {
    check_lag(panel.t(), tau)?;
    let ell = ell.unwrap_or_else(|| default_ell(panel.t(), tau));
    let part1 = sigma_part1(panel, cutoff_n, tau)?;
    let part2 = sigma_part2(panel, cutoff_n, tau, ell)?;
    Ok(VarianceEstimate {
        part1,
        part2,
        total: part1 + part2,
        truncation_ell: ell,
        cutoff_n,
        v_nt: v_nt(cutoff_n, panel.t(), tau)?,
    })
}

/// Variance estimate at `n = [N^alpha_hat]`.
pub fn sigma_tau_sq(panel: &Panel, alpha_hat: f64, tau: usize, ell: Option<usize>) -> Result<VarianceEstimate> {
    let cutoff = cutoff_for_alpha(panel.n(), alpha_hat.clamp(0.0, 1.0))?;
    sigma_tau_sq_at(panel, cutoff, tau, ell)
}

/// Upper `(1 - level) / 2` standard-normal quantile.
pub fn z_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std.inverse_cdf(1.0 - (1.0 - level) / 2.0))
}

/// Symmetric interval `alpha -/+ ln(1 + z 4 sigma^2 / (kappa v^{1/2})) / (2 ln N)`.
#[allow(clippy::too_many_arguments)]
pub fn confidence_interval(
    alpha_tilde: f64,
    kappa_tilde: f64,
    sigma_sq: f64,
    n: usize,
    t: usize,
    tau: usize,
    level: f64,
) -> Result<ConfidenceInterval> {
    if kappa_tilde == 0.0 || !kappa_tilde.is_finite() {
        return Err(Error::InvalidKappa(kappa_tilde));
    }
    let z = z_for_level(level)?;
    let cutoff = cutoff_for_alpha(n, alpha_tilde.clamp(0.0, 1.0))?;
    let v = v_nt(cutoff, t, tau)? as f64;
    let ln_n = (n as f64).ln();
    let denom = kappa_tilde * v.sqrt();
    let arg = 1.0 + z * 4.0 * sigma_sq / denom;
    if !(arg > 0.0) {
        return Err(Error::CiUndefined(arg));
    }
    let half = arg.ln() / (2.0 * ln_n);

    let step = z * 2.0 * sigma_sq.max(0.0).sqrt() / denom;
    let inverted = if 1.0 + step > 0.0 && 1.0 - step > 0.0 {
        Some((alpha_tilde - (1.0 + step).ln() / (2.0 * ln_n), alpha_tilde - (1.0 - step).ln() / (2.0 * ln_n)))
    } else {
        None
    };
    Ok(ConfidenceInterval {
        lower: alpha_tilde - half,
        upper: alpha_tilde + half,
        level,
        z_quantile: z,
        inverted: inverted.map(|(a, b)| (a.min(b), a.max(b))),
    })
}
