//! Preprocessing for observed panels: per-section standardization and removal of
//! the cross-sectional mean by no-intercept regression.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::acf;
use crate::panel::Panel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDiagnostics {
    /// ACF of the cross-sectional mean of the input.
    pub acf_xbar: Vec<f64>,
    /// ACF of the cross-sectional mean of the residuals; empty when that mean vanishes.
    pub acf_ubar: Vec<f64>,
    /// The residual cross-sectional mean is zero to rounding. The slopes of a
    /// no-intercept regression on the mean sum to N, so this is the usual case.
    pub ubar_vanishes: bool,
    pub delta_hat: Vec<f64>,
}

/// `(y_it - mean_i) / sd_i` with the T - 1 divisor.
pub fn standardize(panel: &Panel) -> Result<Panel> {
    let t = panel.t() as f64;
    let mut out = panel.data().clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let m = row.sum() / t;
        let var = row.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (t - 1.0);
        let sd = var.sqrt();
        if !(sd > 1e-12 * m.abs().max(f64::MIN_POSITIVE)) {
            return Err(Error::ConstantSection { row: i + 1 });
        }
        row.mapv_inplace(|x| (x - m) / sd);
    }
    let mut p = Panel::new(out)?;
    if let Some(l) = panel.section_labels() {
        p = p.with_section_labels(l.to_vec())?;
    }
    if let Some(l) = panel.time_labels() {
        p = p.with_time_labels(l.to_vec())?;
    }
    Ok(p)
}

pub fn cross_mean(panel: &Panel) -> Array1<f64> {
    panel.data().mean_axis(Axis(0)).expect("nonempty panel")
}

/// Regress each section on the cross-sectional mean (no intercept) and keep the residuals.
///
/// `max_lag` sets the length of the ACFs in the diagnostics; it is reduced to fit the series.
pub fn defactor(panel: &Panel, max_lag: usize) -> Result<(Panel, EmpiricalDiagnostics)> {
    let xbar = cross_mean(panel);
    let ss = xbar.dot(&xbar);
    if ss == 0.0 {
        return Err(Error::DegenerateCrossMean);
    }
    let delta: Vec<f64> = panel.data().rows().into_iter().map(|r| r.dot(&xbar) / ss).collect();
    let resid = Array2::from_shape_fn(panel.data().dim(), |(i, t)| panel.data()[[i, t]] - delta[i] * xbar[t]);
    let resid = Panel::new(resid)?;
    let lag = max_lag.min(panel.t().saturating_sub(2));
    let acf_xbar = acf(xbar.as_slice().expect("contiguous"), lag)?;
    let ubar = cross_mean(&resid);
    let ubar_vanishes = ubar.dot(&ubar) <= 1e-20 * ss;
    let acf_ubar = if ubar_vanishes { Vec::new() } else { acf(ubar.as_slice().expect("contiguous"), lag)? };
    Ok((resid, EmpiricalDiagnostics { acf_xbar, acf_ubar, ubar_vanishes, delta_hat: delta }))
}
