//! Seeded replication harness: simulate, estimate, aggregate into table rows.
//!
//! Replication `r` (zero-based) draws with seed `base_seed + r`. Replications run
//! in parallel, are collected in index order and reduced serially, so parallel
//! and serial runs give identical summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{kappa_true, simulate_panel, DgpSpec};
use crate::error::{Error, Result};
use crate::estimators::{joint_estimate, marginal_alpha, select_tau};
use crate::inference::{confidence_interval, sigma_tau_sq_at, ConfidenceInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorSet {
    /// Marginal estimator with the DGP's true kappa.
    pub marginal: bool,
    /// Joint estimator with its confidence interval.
    pub joint: bool,
    pub select_tau: bool,
}

impl Default for EstimatorSet {
    fn default() -> Self {
        Self { marginal: true, joint: true, select_tau: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub spec: DgpSpec,
    pub tau_list: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub ci_level: f64,
    pub estimators: EstimatorSet,
    /// Candidates for lag selection; `tau_list` when absent.
    pub select_candidates: Option<Vec<usize>>,
    pub parallel: bool,
}

impl McConfig {
    pub fn new(spec: DgpSpec, tau_list: Vec<usize>) -> Self {
        Self {
            spec,
            tau_list,
            replications: 500,
            base_seed: 1,
            ci_level: 0.90,
            estimators: EstimatorSet::default(),
            select_candidates: None,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidSpec("replications must be positive".into()));
        }
        if self.tau_list.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if matches!(&self.select_candidates, Some(c) if c.is_empty()) {
            return Err(Error::EmptyCandidates);
        }
        self.spec.validate()
    }

    fn candidates(&self) -> &[usize] {
        self.select_candidates.as_deref().unwrap_or(&self.tau_list)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Marginal,
    Joint,
}

#[derive(Debug, Clone)]
struct JointDraw {
    alpha: f64,
    ci: std::result::Result<ConfidenceInterval, Error>,
}

#[derive(Debug, Clone)]
struct TauDraw {
    marginal: Option<Result<f64>>,
    joint: Option<Result<JointDraw>>,
}

#[derive(Debug, Clone)]
struct Replication {
    per_tau: Vec<TauDraw>,
    selected: Option<Result<usize>>,
}

fn run_replication(config: &McConfig, r: usize) -> Replication {
    let spec = config.spec.with_seed(config.base_seed.wrapping_add(r as u64));
    let draw = simulate_panel(&spec);
    let set = config.estimators;
    let per_tau = config
        .tau_list
        .iter()
        .map(|&tau| {
            let panel = draw.as_ref().map(|d| &d.panel).map_err(Clone::clone);
            let marginal = set.marginal.then(|| {
                let panel = panel.clone()?;
                let kappa = kappa_true(&spec, tau)?.value;
                Ok(marginal_alpha(panel, tau, kappa)?.alpha)
            });
            let joint = set.joint.then(|| {
                let panel = panel.clone()?;
                let est = joint_estimate(panel, tau)?;
                let ci = sigma_tau_sq_at(panel, est.cutoff_n, tau, None).and_then(|v| {
                    confidence_interval(est.alpha, est.kappa, v.total, panel.n(), panel.t(), tau, config.ci_level)
                });
                Ok(JointDraw { alpha: est.alpha, ci })
            });
            TauDraw { marginal, joint }
        })
        .collect();
    let selected = set.select_tau.then(|| {
        let d = draw.as_ref().map_err(Clone::clone)?;
        Ok(select_tau(&d.panel, config.candidates())?.tau)
    });
    Replication { per_tau, selected }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiStats {
    pub count: usize,
    pub failures: usize,
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub mean_width: f64,
    /// Share of produced intervals containing alpha0.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub estimator: Estimator,
    pub tau: usize,
    pub successes: usize,
    pub failures: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    /// Estimates outside [0, 1].
    pub out_of_range: usize,
    pub ci: Option<CiStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStats {
    /// Number of replications selecting each lag.
    pub counts: BTreeMap<usize, usize>,
    /// Most frequent lag; smallest on ties.
    pub modal: Option<usize>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub alpha0: f64,
    pub n: usize,
    pub t: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub ci_level: f64,
    pub tau_list: Vec<usize>,
    pub rows: Vec<EstimatorStats>,
    pub selection: Option<SelectionStats>,
}

impl McSummary {
    pub fn row(&self, estimator: Estimator, tau: usize) -> Option<&EstimatorStats> {
        self.rows.iter().find(|r| r.estimator == estimator && r.tau == tau)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn mean_sd_median(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
    (mean, sd, median)
}

fn stats_for(
    estimator: Estimator,
    tau: usize,
    draws: &[Result<f64>],
    cis: Option<Vec<&std::result::Result<ConfidenceInterval, Error>>>,
    alpha0: f64,
) -> EstimatorStats {
    let ok: Vec<f64> = draws.iter().filter_map(|d| d.as_ref().ok().copied()).collect();
    let (mean, sd, median) = mean_sd_median(&ok);
    let ci = cis.map(|cis| {
        let good: Vec<&ConfidenceInterval> = cis.iter().filter_map(|c| c.as_ref().ok()).collect();
        let k = good.len() as f64;
        let avg = |f: &dyn Fn(&ConfidenceInterval) -> f64| {
            if good.is_empty() {
                f64::NAN
            } else {
                good.iter().map(|c| f(c)).sum::<f64>() / k
            }
        };
        CiStats {
            count: good.len(),
            failures: cis.len() - good.len(),
            mean_lower: avg(&|c| c.lower),
            mean_upper: avg(&|c| c.upper),
            mean_width: avg(&|c| c.width()),
            coverage: if good.is_empty() {
                f64::NAN
            } else {
                good.iter().filter(|c| c.contains(alpha0)).count() as f64 / k
            },
        }
    });
    EstimatorStats {
        estimator,
        tau,
        successes: ok.len(),
        failures: draws.len() - ok.len(),
        mean,
        sd,
        median,
        out_of_range: ok.iter().filter(|a| !(0.0..=1.0).contains(*a)).count(),
        ci,
    }
}

pub fn run_mc(config: &McConfig) -> Result<McSummary> {
    config.validate()?;
    let reps: Vec<Replication> = if config.parallel {
        (0..config.replications).into_par_iter().map(|r| run_replication(config, r)).collect()
    } else {
        (0..config.replications).map(|r| run_replication(config, r)).collect()
    };

    let alpha0 = config.spec.alpha0;
    let mut rows = Vec::new();
    for (k, &tau) in config.tau_list.iter().enumerate() {
        if config.estimators.marginal {
            let draws: Vec<Result<f64>> =
                reps.iter().map(|r| r.per_tau[k].marginal.clone().expect("marginal enabled")).collect();
            rows.push(stats_for(Estimator::Marginal, tau, &draws, None, alpha0));
        }
        if config.estimators.joint {
            let joint: Vec<&Result<JointDraw>> =
                reps.iter().map(|r| r.per_tau[k].joint.as_ref().expect("joint enabled")).collect();
            let draws: Vec<Result<f64>> =
                joint.iter().map(|j| j.as_ref().map(|d| d.alpha).map_err(Clone::clone)).collect();
            let cis = joint.iter().filter_map(|j| j.as_ref().ok()).map(|d| &d.ci).collect();
            rows.push(stats_for(Estimator::Joint, tau, &draws, Some(cis), alpha0));
        }
    }

    let selection = config.estimators.select_tau.then(|| {
        let mut counts = BTreeMap::new();
        let mut failures = 0;
        for r in &reps {
            match r.selected.as_ref().expect("selection enabled") {
                Ok(tau) => *counts.entry(*tau).or_insert(0) += 1,
                Err(_) => failures += 1,
            }
        }
        let mut modal: Option<(usize, usize)> = None;
        for (&tau, &c) in &counts {
            if modal.is_none_or(|(_, best)| c > best) {
                modal = Some((tau, c));
            }
        }
        SelectionStats { counts, modal: modal.map(|(tau, _)| tau), failures }
    });

    Ok(McSummary {
        alpha0,
        n: config.spec.n,
        t: config.spec.t,
        replications: config.replications,
        base_seed: config.base_seed,
        ci_level: config.ci_level,
        tau_list: config.tau_list.clone(),
        rows,
        selection,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.4}"),
        _ => "NA".to_string(),
    }
}

fn block_rows(s: &McSummary, taus: &[usize]) -> Vec<(&'static str, Vec<String>)> {
    let pick = |est: Estimator, f: &dyn Fn(&EstimatorStats) -> Option<f64>| -> Vec<String> {
        taus.iter().map(|&tau| cell(s.row(est, tau).and_then(f))).collect()
    };
    let mut out = Vec::new();
    if s.rows.iter().any(|r| r.estimator == Estimator::Marginal) {
        out.push(("alpha_hat", pick(Estimator::Marginal, &|r| Some(r.mean))));
    }
    if s.rows.iter().any(|r| r.estimator == Estimator::Joint) {
        out.push(("alpha_tilde", pick(Estimator::Joint, &|r| Some(r.mean))));
    }
    out.push(("ci_upper", pick(Estimator::Joint, &|r| r.ci.as_ref().map(|c| c.mean_upper))));
    out.push(("ci_lower", pick(Estimator::Joint, &|r| r.ci.as_ref().map(|c| c.mean_lower))));
    out
}

fn markdown_label(key: &str, level: f64) -> String {
    let pct = format!("{}%", (level * 100.0).round());
    match key {
        "alpha_hat" => "α̂".to_string(),
        "alpha_tilde" => "α̃".to_string(),
        "ci_upper" => format!("{pct} CI Upper"),
        _ => format!("{pct} CI Lower"),
    }
}

/// Render one block per summary (one per alpha0) with a column per lag.
pub fn emit_table(summaries: &[McSummary], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            for (b, s) in summaries.iter().enumerate() {
                if b > 0 {
                    out.push('\n');
                }
                let sel = s.selection.as_ref().and_then(|x| x.modal).map(|t| format!(" (τ̃={t})")).unwrap_or_default();
                let _ = write!(out, "| α₀={}{sel} |", s.alpha0);
                for tau in &s.tau_list {
                    let _ = write!(out, " τ={tau} |");
                }
                out.push('\n');
                out.push_str(&"|---".repeat(s.tau_list.len() + 1));
                out.push_str("|\n");
                for (key, cells) in block_rows(s, &s.tau_list) {
                    let _ = writeln!(out, "| {} | {} |", markdown_label(key, s.ci_level), cells.join(" | "));
                }
            }
        }
        TableFormat::Csv => {
            let mut taus: Vec<usize> = summaries.iter().flat_map(|s| s.tau_list.iter().copied()).collect();
            taus.sort_unstable();
            taus.dedup();
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["alpha0".to_string(), "tau_tilde".to_string(), "row".to_string()];
            header.extend(taus.iter().map(|t| format!("tau={t}")));
            w.write_record(&header).expect("in-memory write");
            for s in summaries {
                let sel = s.selection.as_ref().and_then(|x| x.modal).map(|t| t.to_string()).unwrap_or_default();
                for (key, cells) in block_rows(s, &taus) {
                    let mut rec = vec![s.alpha0.to_string(), sel.clone(), key.to_string()];
                    rec.extend(cells.into_iter().zip(&taus).map(|(c, tau)| {
                        if s.tau_list.contains(tau) {
                            c
                        } else {
                            String::new()
                        }
                    }));
                    w.write_record(&rec).expect("in-memory write");
                }
            }
            out = String::from_utf8(w.into_inner().expect("flush")).expect("utf8");
        }
    }
    out
}
