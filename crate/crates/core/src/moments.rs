//! Partial cross-sectional means and their lag autocovariances.
//!
//! Every autocovariance here uses two window means: the leading window
//! `t = 1..T-tau` and the lagging window `t = 1+tau..T`, each averaged with
//! divisor `T - tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Panel;

/// `xbar_{nt}`: the mean of the first `n` sections at each time.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMeanSeries {
    pub values: Vec<f64>,
    pub n: usize,
}

/// `sigma_hat_n(tau)` for every cutoff `n = 1..N`; `sigma_hat[n - 1]` is cutoff `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocovPanel {
    pub sigma_hat: Vec<f64>,
    pub tau: usize,
}

impl AutocovPanel {
    pub fn new(sigma_hat: Vec<f64>, tau: usize) -> Self {
        Self { sigma_hat, tau }
    }

    pub fn n(&self) -> usize {
        self.sigma_hat.len()
    }

    /// `sigma_hat_n(tau)` for one-based cutoff `n`.
    pub fn at(&self, n: usize) -> f64 {
        self.sigma_hat[n - 1]
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

pub(crate) fn check_cutoff(panel: &Panel, n: usize) -> Result<()> {
    if n == 0 || n > panel.n() {
        return Err(Error::InvalidCutoff { n, max: panel.n() });
    }
    Ok(())
}

pub(crate) fn check_lag(t: usize, tau: usize) -> Result<()> {
    if tau + 2 > t {
        return Err(Error::DegenerateWindow { tau, t });
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Lag-`tau` autocovariance of a single series with separate window means.
pub fn lagged_autocov(series: &[f64], tau: usize) -> Result<f64> {
    let t = series.len();
    check_lag(t, tau)?;
    let len = t - tau;
    let lead = &series[..len];
    let lag = &series[tau..];
    let (m1, m2) = (mean(lead), mean(lag));
    let s: f64 = lead.iter().zip(lag).map(|(a, b)| (a - m1) * (b - m2)).sum();
    Ok(s / len as f64)
}

fn products(series: &[f64], tau: usize) -> Vec<f64> {
    let len = series.len() - tau;
    let lead = &series[..len];
    let lag = &series[tau..];
    let (m1, m2) = (mean(lead), mean(lag));
    lead.iter().zip(lag).map(|(a, b)| (a - m1) * (b - m2)).collect()
}

pub fn partial_mean(panel: &Panel, n: usize) -> Result<PartialMeanSeries> {
    check_cutoff(panel, n)?;
    let t = panel.t();
    let mut acc = vec![Kahan::default(); t];
    for i in 0..n {
        for (k, x) in acc.iter_mut().zip(panel.section(i)) {
            k.add(*x);
        }
    }
    let values = acc.iter().map(|k| k.sum / n as f64).collect();
    Ok(PartialMeanSeries { values, n })
}

pub fn autocov_hat(panel: &Panel, n: usize, tau: usize) -> Result<f64> {
    check_cutoff(panel, n)?;
    check_lag(panel.t(), tau)?;
    let xbar = partial_mean(panel, n)?;
    lagged_autocov(&xbar.values, tau)
}

/// `autocov_hat` for every cutoff, reusing compensated running sums over sections.
pub fn autocov_profile(panel: &Panel, tau: usize) -> Result<AutocovPanel> {
    let t = panel.t();
    check_lag(t, tau)?;
    let mut acc = vec![Kahan::default(); t];
    let mut xbar = vec![0.0; t];
    let mut sigma_hat = Vec::with_capacity(panel.n());
    for i in 0..panel.n() {
        let n = (i + 1) as f64;
        for ((k, x), out) in acc.iter_mut().zip(panel.section(i)).zip(xbar.iter_mut()) {
            k.add(*x);
            *out = k.sum / n;
        }
        sigma_hat.push(lagged_autocov(&xbar, tau)?);
    }
    Ok(AutocovPanel { sigma_hat, tau })
}

/// `sigma_hat_{i,T}(tau)`: covariance of section `i` (leading window) with the
/// cutoff-`n` partial mean (lagging window). Both indices are one-based.
pub fn section_partial_cov(panel: &Panel, i: usize, n: usize, tau: usize) -> Result<f64> {
    if i == 0 || i > panel.n() {
        return Err(Error::InvalidSection { i, max: panel.n() });
    }
    check_cutoff(panel, n)?;
    check_lag(panel.t(), tau)?;
    let xbar = partial_mean(panel, n)?;
    Ok(section_cov_with(&panel.section(i - 1).to_vec(), &xbar.values, tau))
}

pub(crate) fn section_cov_with(section: &[f64], xbar: &[f64], tau: usize) -> f64 {
    let len = section.len() - tau;
    let lead = &section[..len];
    let lag = &xbar[tau..];
    let (m1, m2) = (mean(lead), mean(lag));
    let s: f64 = lead.iter().zip(lag).map(|(a, b)| (a - m1) * (b - m2)).sum();
    s / len as f64
}

/// `sigma_hat_{n,t}(tau)` for `t = 1..T-tau`; averages to `autocov_hat(panel, n, tau)`.
pub fn per_time_products(panel: &Panel, n: usize, tau: usize) -> Result<Vec<f64>> {
    check_cutoff(panel, n)?;
    check_lag(panel.t(), tau)?;
    let xbar = partial_mean(panel, n)?;
    Ok(products(&xbar.values, tau))
}

/// Sample autocorrelation for lags `0..=max_lag` (divisor T, full-sample mean).
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let t = series.len();
    if t < max_lag + 2 {
        return Err(Error::SeriesTooShort { len: t, need: max_lag + 2 });
    }
    let m = mean(series);
    let dev: Vec<f64> = series.iter().map(|x| x - m).collect();
    let gamma = |h: usize| dev[..t - h].iter().zip(&dev[h..]).map(|(a, b)| a * b).sum::<f64>();
    let g0 = gamma(0);
    let scale = 1e-14 * m.abs();
    if g0 <= scale * scale * t as f64 {
        return Err(Error::DegenerateSeries);
    }
    Ok((0..=max_lag).map(|h| if h == 0 { 1.0 } else { gamma(h) / g0 }).collect())
}
