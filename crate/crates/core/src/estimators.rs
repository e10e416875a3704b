//! Marginal and joint estimators of the dependence exponent, and lag selection.
//!
//! The joint criterion for a cutoff `c = [N^alpha]` is the weighted least-squares
//! fit of the autocovariance profile to the piecewise curve
//!
//! ```text
//! sigma_n = kappa            for n <= c
//! sigma_n = kappa c^2 / n^2  for n >  c
//! ```
//!
//! with weights `n^3`. For fixed `c` the optimal `kappa` has a closed form, and the
//! profiled criterion depends on `alpha` only through `c`, so the estimator scans
//! every cutoff `1..=N` exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{autocov_hat, autocov_profile, AutocovPanel};
use crate::panel::{floor_pow, Diagnostics, EstimateResult, Method, Panel};

/// The sums behind the profiled criterion at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointObjectiveParts {
    /// `sum_{n <= c} n^3 sigma_n`
    pub q1: f64,
    /// `sum_{n > c} n sigma_n`
    pub q2: f64,
    /// `sum_{n <= c} n^3 + c^4 sum_{n > c} 1/n`
    pub n1: f64,
    /// `sum_n n^3 sigma_n^2`
    pub q_total: f64,
}

impl JointObjectiveParts {
    fn numerator(&self, cutoff: usize) -> f64 {
        let c2 = (cutoff as f64).powi(2);
        self.q1 + c2 * self.q2
    }

    pub fn kappa(&self, cutoff: usize) -> f64 {
        self.numerator(cutoff) / self.n1
    }

    pub fn concentrated(&self, cutoff: usize) -> f64 {
        self.numerator(cutoff).powi(2) / self.n1
    }
}

fn cube(n: usize) -> f64 {
    let x = n as f64;
    x * x * x
}

/// `[N^alpha]` for `alpha` in `[0, 1]`.
pub fn cutoff_for_alpha(n: usize, alpha: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok((floor_pow(n as u64, alpha) as usize).clamp(1, n))
}

/// `ln(c) / ln(N)`, the exponent reported for cutoff `c`.
pub fn alpha_for_cutoff(n: usize, cutoff: usize) -> f64 {
    if cutoff <= 1 {
        0.0
    } else {
        (cutoff as f64).ln() / (n as f64).ln()
    }
}

fn check_profile_cutoff(profile: &AutocovPanel, cutoff: usize) -> Result<()> {
    if cutoff == 0 || cutoff > profile.n() {
        return Err(Error::InvalidCutoff { n: cutoff, max: profile.n() });
    }
    Ok(())
}

pub fn objective_parts(profile: &AutocovPanel, cutoff: usize) -> Result<JointObjectiveParts> {
    check_profile_cutoff(profile, cutoff)?;
    let c4 = (cutoff as f64).powi(4);
    let mut parts = JointObjectiveParts { q1: 0.0, q2: 0.0, n1: 0.0, q_total: 0.0 };
    for (idx, &s) in profile.sigma_hat.iter().enumerate() {
        let n = idx + 1;
        let w = cube(n);
        parts.q_total += w * s * s;
        if n <= cutoff {
            parts.q1 += w * s;
            parts.n1 += w;
        } else {
            parts.q2 += n as f64 * s;
            parts.n1 += c4 / n as f64;
        }
    }
    Ok(parts)
}

/// The weighted least-squares criterion at cutoff `c` and level `kappa`.
pub fn joint_objective_at(profile: &AutocovPanel, cutoff: usize, kappa: f64) -> Result<f64> {
    check_profile_cutoff(profile, cutoff)?;
    let c2 = (cutoff as f64).powi(2);
    Ok(profile
        .sigma_hat
        .iter()
        .enumerate()
        .map(|(idx, &s)| {
            let n = idx + 1;
            let fitted = if n <= cutoff { kappa } else { c2 / (n as f64).powi(2) * kappa };
            cube(n) * (s - fitted).powi(2)
        })
        .sum())
}

pub fn profiled_kappa_at(profile: &AutocovPanel, cutoff: usize) -> Result<f64> {
    Ok(objective_parts(profile, cutoff)?.kappa(cutoff))
}

pub fn concentrated_objective_at(profile: &AutocovPanel, cutoff: usize) -> Result<f64> {
    Ok(objective_parts(profile, cutoff)?.concentrated(cutoff))
}

/// Concentrated criterion for every cutoff `1..=N` in O(N).
pub fn concentrated_scan(profile: &AutocovPanel) -> Vec<f64> {
    let n = profile.n();
    let s = &profile.sigma_hat;
    // suffix[c] = sum_{m > c} m sigma_m and inv[c] = sum_{m > c} 1/m, c = 0..=N
    let mut suffix = vec![0.0; n + 1];
    let mut inv = vec![0.0; n + 1];
    for c in (0..n).rev() {
        let m = c + 1;
        suffix[c] = suffix[c + 1] + m as f64 * s[c];
        inv[c] = inv[c + 1] + 1.0 / m as f64;
    }
    let mut q1 = 0.0;
    let mut w1 = 0.0;
    (1..=n)
        .map(|c| {
            q1 += cube(c) * s[c - 1];
            w1 += cube(c);
            let cf = c as f64;
            let n1 = w1 + cf.powi(4) * inv[c];
            (q1 + cf * cf * suffix[c]).powi(2) / n1
        })
        .collect()
}

/// Joint estimate from a precomputed autocovariance profile.
pub fn joint_estimate_profile(profile: &AutocovPanel) -> Result<EstimateResult> {
    let n = profile.n();
    if n < 1 {
        return Err(Error::InvalidCutoff { n: 0, max: 0 });
    }
    let scan = concentrated_scan(profile);
    let mut best = 1;
    for (idx, &q) in scan.iter().enumerate() {
        // strict comparison keeps the smallest cutoff on ties
        if q > scan[best - 1] {
            best = idx + 1;
        }
    }
    let parts = objective_parts(profile, best)?;
    let kappa = parts.kappa(best);
    let objective_value = joint_objective_at(profile, best, kappa)?;
    let c4 = (best as f64).powi(4);
    let diagnostics = Diagnostics {
        out_of_range: false,
        kappa_alt: Some((parts.q1 + c4 * parts.q2) / parts.n1),
        nonpositive_kappa: kappa <= 0.0,
        perfect_fit: objective_value == 0.0,
    };
    Ok(EstimateResult {
        alpha: alpha_for_cutoff(n, best),
        kappa,
        tau: profile.tau,
        cutoff_n: best,
        objective_value,
        method: Method::Joint,
        diagnostics,
    })
}

pub fn joint_objective(panel: &Panel, alpha: f64, kappa: f64, tau: usize) -> Result<f64> {
    let cutoff = cutoff_for_alpha(panel.n(), alpha)?;
    joint_objective_at(&autocov_profile(panel, tau)?, cutoff, kappa)
}

pub fn profiled_kappa(panel: &Panel, alpha: f64, tau: usize) -> Result<f64> {
    let cutoff = cutoff_for_alpha(panel.n(), alpha)?;
    profiled_kappa_at(&autocov_profile(panel, tau)?, cutoff)
}

pub fn concentrated_objective(panel: &Panel, alpha: f64, tau: usize) -> Result<f64> {
    let cutoff = cutoff_for_alpha(panel.n(), alpha)?;
    concentrated_objective_at(&autocov_profile(panel, tau)?, cutoff)
}

pub fn joint_estimate(panel: &Panel, tau: usize) -> Result<EstimateResult> {
    joint_estimate_profile(&autocov_profile(panel, tau)?)
}

/// Closed-form exponent given a known `kappa_tau`, from the full cross-sectional mean.
pub fn marginal_alpha(panel: &Panel, tau: usize, kappa_tau: f64) -> Result<EstimateResult> {
    if kappa_tau == 0.0 || !kappa_tau.is_finite() {
        return Err(Error::InvalidKappa(kappa_tau));
    }
    let n = panel.n();
    let sigma_n = autocov_hat(panel, n, tau)?;
    if sigma_n == 0.0 {
        return Err(Error::DegenerateCovariance);
    }
    let ln_n = (n as f64).ln();
    let alpha = ((sigma_n * sigma_n).ln() - (kappa_tau * kappa_tau).ln()) / (4.0 * ln_n) + 1.0;
    let out_of_range = !(0.0..=1.0).contains(&alpha);
    let cutoff_n = cutoff_for_alpha(n, alpha.clamp(0.0, 1.0))?;
    let profile = autocov_profile(panel, tau)?;
    let objective_value = joint_objective_at(&profile, cutoff_n, kappa_tau)?;
    Ok(EstimateResult {
        alpha,
        kappa: kappa_tau,
        tau,
        cutoff_n,
        objective_value,
        method: Method::Marginal,
        diagnostics: Diagnostics {
            out_of_range,
            kappa_alt: None,
            nonpositive_kappa: kappa_tau < 0.0,
            perfect_fit: false,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSelection {
    pub tau: usize,
    pub results: Vec<EstimateResult>,
    /// `kappa / Q` per candidate; `+inf` marks a perfect fit.
    pub ratios: Vec<f64>,
    /// Some candidate had a zero objective.
    pub degenerate_fit: bool,
}

impl TauSelection {
    pub fn selected(&self) -> &EstimateResult {
        self.results.iter().find(|r| r.tau == self.tau).expect("selected lag is a candidate")
    }
}

fn selection_ratio(r: &EstimateResult) -> f64 {
    if r.objective_value == 0.0 {
        f64::INFINITY
    } else {
        r.kappa / r.objective_value
    }
}

/// Pick the lag maximizing `kappa_tau / Q(alpha_tau, kappa_tau, tau)` among the candidates.
pub fn select_tau(panel: &Panel, tau_candidates: &[usize]) -> Result<TauSelection> {
    if tau_candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let results = tau_candidates.par_iter().map(|&tau| joint_estimate(panel, tau)).collect::<Result<Vec<_>>>()?;
    Ok(select_from_results(results))
}

pub(crate) fn select_from_results(results: Vec<EstimateResult>) -> TauSelection {
    let ratios: Vec<f64> = results.iter().map(selection_ratio).collect();
    let mut best = 0;
    for i in 1..results.len() {
        let better = ratios[i] > ratios[best] || (ratios[i] == ratios[best] && results[i].tau < results[best].tau);
        if better {
            best = i;
        }
    }
    TauSelection {
        tau: results[best].tau,
        degenerate_fit: results.iter().any(|r| r.diagnostics.perfect_fit),
        ratios,
        results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_panel(n: usize, t: usize, seed: u64) -> Panel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Panel::new(Array2::from_shape_fn((n, t), |_| rng.sample(StandardNormal))).unwrap()
    }

    fn piecewise_profile(n: usize, cutoff: usize, kappa: f64, tau: usize) -> AutocovPanel {
        let c2 = (cutoff as f64).powi(2);
        let s = (1..=n).map(|m| if m <= cutoff { kappa } else { kappa * c2 / (m as f64).powi(2) }).collect();
        AutocovPanel::new(s, tau)
    }

    #[test]
    fn perfect_constant_fit_at_alpha_one() {
        let prof = AutocovPanel::new(vec![0.7; 9], 1);
        assert_eq!(joint_objective_at(&prof, 9, 0.7).unwrap(), 0.0);
        assert!((profiled_kappa_at(&prof, 9).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn kappa_at_alpha_one_is_weighted_mean() {
        let prof = AutocovPanel::new(vec![0.3, -0.1, 0.5, 0.2], 0);
        let num: f64 = prof.sigma_hat.iter().enumerate().map(|(i, s)| cube(i + 1) * s).sum();
        let den: f64 = (1..=4).map(cube).sum();
        assert!((profiled_kappa_at(&prof, 4).unwrap() - num / den).abs() < 1e-15);
    }

    #[test]
    fn kappa_recovers_exact_model() {
        let prof = piecewise_profile(30, 7, 1.7, 1);
        assert!((profiled_kappa_at(&prof, 7).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn joint_objective_brute_force_6x20() {
        let p = random_panel(6, 20, 99);
        let (alpha, kappa, tau) = (0.5, 0.3, 1);
        let got = joint_objective(&p, alpha, kappa, tau).unwrap();
        // [6^0.5] = 2
        let mut brute = 0.0;
        for n in 1..=6usize {
            let xbar: Vec<f64> = (0..20).map(|t| (0..n).map(|i| p.data()[[i, t]]).sum::<f64>() / n as f64).collect();
            let len = 19;
            let m1 = xbar[..len].iter().sum::<f64>() / len as f64;
            let m2 = xbar[1..].iter().sum::<f64>() / len as f64;
            let s: f64 = (0..len).map(|t| (xbar[t] - m1) * (xbar[t + 1] - m2)).sum::<f64>() / len as f64;
            let fitted = if n <= 2 { kappa } else { 4.0 / (n * n) as f64 * kappa };
            brute += (n as f64).powi(3) * (s - fitted).powi(2);
        }
        assert!((got - brute).abs() <= 1e-10 * brute);
    }

    #[test]
    fn noise_free_profile_recovers_cutoff_and_kappa() {
        let prof = piecewise_profile(50, 10, 2.0, 1);
        let r = joint_estimate_profile(&prof).unwrap();
        assert_eq!(r.cutoff_n, 10);
        assert!((r.alpha - 10f64.ln() / 50f64.ln()).abs() < 1e-15);
        assert!((r.kappa - 2.0).abs() < 1e-12);
        assert!(r.objective_value < 1e-18);
        // exhaustive (cutoff, kappa-grid) oracle
        let mut best = (f64::INFINITY, 0, 0.0);
        for c in 1..=50 {
            for k in 0..=400 {
                let kappa = k as f64 * 0.01;
                let q = joint_objective_at(&prof, c, kappa).unwrap();
                if q < best.0 {
                    best = (q, c, kappa);
                }
            }
        }
        assert_eq!(best.1, 10);
        assert!((best.2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scan_matches_pointwise() {
        let p = random_panel(15, 25, 4);
        let prof = autocov_profile(&p, 2).unwrap();
        let scan = concentrated_scan(&prof);
        for c in 1..=15 {
            let direct = concentrated_objective_at(&prof, c).unwrap();
            assert!((scan[c - 1] - direct).abs() <= 1e-10 * direct.abs().max(1e-300));
        }
    }

    #[test]
    fn ties_pick_smallest_cutoff() {
        let prof = AutocovPanel::new(vec![0.0; 8], 0);
        let r = joint_estimate_profile(&prof).unwrap();
        assert_eq!(r.cutoff_n, 1);
        assert_eq!(r.alpha, 0.0);
        assert!(r.diagnostics.perfect_fit);
    }

    #[test]
    fn kappa_alt_uses_fourth_power() {
        let prof = piecewise_profile(20, 4, 1.0, 1);
        let r = joint_estimate_profile(&prof).unwrap();
        let parts = objective_parts(&prof, 4).unwrap();
        assert_eq!(r.diagnostics.kappa_alt, Some((parts.q1 + 256.0 * parts.q2) / parts.n1));
    }

    #[test]
    fn marginal_examples() {
        let p = random_panel(8, 40, 17);
        let s = autocov_hat(&p, 8, 1).unwrap();
        let r = marginal_alpha(&p, 1, s).unwrap();
        assert!((r.alpha - 1.0).abs() < 1e-12);
        assert_eq!(r.method, Method::Marginal);
        assert_eq!(r.kappa, s);
        // sigma_N^2 = kappa^2 / N^4  ->  alpha = 0
        let kappa = s.abs() * 64.0;
        let r = marginal_alpha(&p, 1, kappa).unwrap();
        assert!(r.alpha.abs() < 1e-12);
        // out of range is reported, not clamped
        let r = marginal_alpha(&p, 1, s * 1e-3).unwrap();
        assert!(r.alpha > 1.0 && r.diagnostics.out_of_range);
        assert_eq!(marginal_alpha(&p, 1, 0.0), Err(Error::InvalidKappa(0.0)));
        let flat = Panel::new(Array2::from_elem((3, 6), 1.0)).unwrap();
        assert_eq!(marginal_alpha(&flat, 1, 1.0), Err(Error::DegenerateCovariance));
    }

    #[test]
    fn alpha_domain_is_checked() {
        let p = random_panel(5, 10, 1);
        assert_eq!(joint_objective(&p, 1.2, 0.1, 0), Err(Error::InvalidAlpha(1.2)));
        assert!(joint_objective(&p, 0.5, 0.1, 9).is_err());
    }

    #[test]
    fn select_single_candidate() {
        let p = random_panel(10, 30, 8);
        let sel = select_tau(&p, &[3]).unwrap();
        assert_eq!(sel.tau, 3);
        assert_eq!(sel.results.len(), 1);
        assert_eq!(select_tau(&p, &[]), Err(Error::EmptyCandidates));
    }

    #[test]
    fn selection_ratio_and_ties() {
        let mk = |tau, kappa, q| EstimateResult {
            alpha: 0.5,
            kappa,
            tau,
            cutoff_n: 2,
            objective_value: q,
            method: Method::Joint,
            diagnostics: Diagnostics::default(),
        };
        let sel = select_from_results(vec![mk(3, 1.0, 2.0), mk(1, 2.0, 4.0), mk(2, 1.0, 1.0)]);
        assert_eq!(sel.tau, 2);
        let sel = select_from_results(vec![mk(3, 1.0, 2.0), mk(1, 2.0, 4.0)]);
        assert_eq!(sel.tau, 1);
        // negative kappa loses to any positive one
        let sel = select_from_results(vec![mk(1, -5.0, 1e-9), mk(2, 1e-6, 1e6)]);
        assert_eq!(sel.tau, 2);
    }

    proptest! {
        #[test]
        fn concentration_identity(seed in 0u64..5000, tau in 0usize..4) {
            let p = random_panel(6, 20, seed);
            let prof = autocov_profile(&p, tau).unwrap();
            for c in 1..=6 {
                let parts = objective_parts(&prof, c).unwrap();
                let k = parts.kappa(c);
                let lhs = joint_objective_at(&prof, c, k).unwrap() + parts.concentrated(c);
                prop_assert!((lhs - parts.q_total).abs() <= 1e-8 * parts.q_total);
            }
        }

        #[test]
        fn kappa_is_optimal(seed in 0u64..5000, tau in 0usize..4) {
            let p = random_panel(7, 18, seed);
            let prof = autocov_profile(&p, tau).unwrap();
            for c in 1..=7 {
                let k = profiled_kappa_at(&prof, c).unwrap();
                let q0 = joint_objective_at(&prof, c, k).unwrap();
                let eps = 1e-3 * (1.0 + k.abs());
                prop_assert!(joint_objective_at(&prof, c, k + eps).unwrap() > q0);
                prop_assert!(joint_objective_at(&prof, c, k - eps).unwrap() > q0);
            }
        }

        #[test]
        fn scale_equivariance(seed in 0u64..5000, c in 0.2f64..5.0, tau in 0usize..3) {
            let p = random_panel(9, 25, seed);
            let a = joint_estimate(&p, tau).unwrap();
            let b = joint_estimate(&p.scaled(c).unwrap(), tau).unwrap();
            prop_assert_eq!(a.cutoff_n, b.cutoff_n);
            prop_assert!((b.kappa - c * c * a.kappa).abs() <= 1e-9 * (c * c * a.kappa).abs().max(1e-12));
        }

        #[test]
        fn joint_objective_nonnegative(seed in 0u64..5000, alpha in 0.0f64..1.0, kappa in -3.0f64..3.0) {
            let p = random_panel(6, 12, seed);
            prop_assert!(joint_objective(&p, alpha, kappa, 1).unwrap() >= 0.0);
        }
    }
}
