//! Seeded factor-model panel simulation.
//!
//! `x_it = mu + beta_i' F_t + u_it`, with the first `M = [N^alpha0]` loadings drawn
//! from a nondegenerate law and the rest decaying geometrically.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{floor_pow, Panel};

const STREAM_LOADINGS: u64 = 1;
const STREAM_FACTORS: u64 = 2;
const STREAM_ERRORS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrongLaw {
    Uniform { lo: f64, hi: f64 },
}

impl StrongLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            StrongLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            StrongLaw::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadingLaw {
    pub strong: StrongLaw,
    /// Loadings beyond the strong block are `tail_decay^(i - M)`.
    pub tail_decay: f64,
}

/// A coefficient that may depend on the cross-section size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Fixed(f64),
    InvSqrtN,
    InvLogN,
}

impl Coefficient {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Coefficient::Fixed(v) => v,
            Coefficient::InvSqrtN => 1.0 / (n as f64).sqrt(),
            Coefficient::InvLogN => 1.0 / (n as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorProcess {
    /// One coefficient per factor, or a single coefficient shared by all.
    Ar1 { rho: Vec<f64> },
    /// `f_t = Z_t + theta_1 Z_{t-1} + ... + theta_q Z_{t-q}`, shared by all factors.
    Ma { theta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorProcess {
    Iid,
    /// `u_it = eta_i g_t` with `g_t = h g_{t-1} + e_t`, `eta_i ~ N(0, 1)`.
    Ar1 {
        h: Coefficient,
    },
    /// `u_it = eta_i g_t` with `g_t = K_t + h_1 K_{t-1} + ... + h_q K_{t-q}`.
    Ma {
        h: Vec<Coefficient>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub n: usize,
    pub t: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub alpha0: f64,
    pub mu: f64,
    pub loadings: LoadingLaw,
    pub factors: FactorProcess,
    pub errors: ErrorProcess,
    pub num_factors: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_burn_in() -> usize {
    50
}

const EXAMPLE_LOADINGS: LoadingLaw = LoadingLaw { strong: StrongLaw::Uniform { lo: 0.5, hi: 1.5 }, tail_decay: 0.8 };

impl DgpSpec {
    /// Two AR(1) factors (rho = 0.9), i.i.d. N(0, 1) errors.
    pub fn example1(n: usize, t: usize, alpha0: f64, seed: u64) -> Self {
        Self {
            n,
            t,
            burn_in: 50,
            alpha0,
            mu: 1.0,
            loadings: EXAMPLE_LOADINGS,
            factors: FactorProcess::Ar1 { rho: vec![0.9, 0.9] },
            errors: ErrorProcess::Iid,
            num_factors: 2,
            seed,
        }
    }

    /// Example 1 factors with AR(1) errors `u_it = eta_i g_t`.
    pub fn example2(n: usize, t: usize, alpha0: f64, h: Coefficient, seed: u64) -> Self {
        Self { errors: ErrorProcess::Ar1 { h }, ..Self::example1(n, t, alpha0, seed) }
    }

    /// MA(2) factors (0.8, 0.6) and MA(2) errors with `h = (1/ln N, 1/sqrt N)`.
    pub fn example3(n: usize, t: usize, alpha0: f64, seed: u64) -> Self {
        Self {
            factors: FactorProcess::Ma { theta: vec![0.8, 0.6] },
            errors: ErrorProcess::Ma { h: vec![Coefficient::InvLogN, Coefficient::InvSqrtN] },
            ..Self::example1(n, t, alpha0, seed)
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// `M = [N^alpha0]`, the number of strong loadings.
    pub fn strong_count(&self) -> usize {
        (floor_pow(self.n as u64, self.alpha0) as usize).clamp(1, self.n)
    }

    pub fn factor_ar_coefs(&self) -> Option<Vec<f64>> {
        match &self.factors {
            FactorProcess::Ar1 { rho } if rho.len() == 1 => Some(vec![rho[0]; self.num_factors]),
            FactorProcess::Ar1 { rho } => Some(rho.clone()),
            FactorProcess::Ma { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.t < 2 {
            return Err(Error::InvalidSpec(format!("need N, T >= 2, got {} x {}", self.n, self.t)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::InvalidSpec(format!("alpha0 {} outside (0, 1]", self.alpha0)));
        }
        if self.num_factors == 0 {
            return Err(Error::InvalidSpec("need at least one factor".into()));
        }
        let StrongLaw::Uniform { lo, hi } = self.loadings.strong;
        if !(lo < hi) {
            return Err(Error::InvalidSpec(format!("uniform({lo}, {hi}) is empty")));
        }
        if !(0.0..1.0).contains(&self.loadings.tail_decay) {
            return Err(Error::InvalidSpec(format!("tail decay {} outside [0, 1)", self.loadings.tail_decay)));
        }
        if let FactorProcess::Ar1 { rho } = &self.factors {
            if rho.len() != 1 && rho.len() != self.num_factors {
                return Err(Error::InvalidSpec(format!(
                    "{} AR coefficients for {} factors",
                    rho.len(),
                    self.num_factors
                )));
            }
            if let Some(&r) = rho.iter().find(|r| r.abs() >= 1.0) {
                return Err(Error::NonstationarySpec(r));
            }
        }
        if let ErrorProcess::Ar1 { h } = self.errors {
            let h = h.resolve(self.n);
            if h.abs() >= 1.0 {
                return Err(Error::NonstationarySpec(h));
            }
        }
        Ok(())
    }
}

fn stream(seed: u64, role: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role);
    rng
}

/// One simulated panel with every component kept for checking.
#[derive(Debug, Clone)]
pub struct FactorPanelDraw {
    pub panel: Panel,
    /// N x m
    pub loadings: Array2<f64>,
    /// T x m
    pub factors: Array2<f64>,
    /// N x T
    pub errors: Array2<f64>,
    pub spec: DgpSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaTrue {
    pub value: f64,
    pub tau: usize,
}

pub fn gen_loadings<R: Rng>(spec: &DgpSpec, rng: &mut R) -> Array2<f64> {
    let m = spec.strong_count();
    let StrongLaw::Uniform { lo, hi } = spec.loadings.strong;
    let law = Uniform::new(lo, hi).expect("validated bounds");
    let rho = spec.loadings.tail_decay;
    let mut out = Array2::zeros((spec.n, spec.num_factors));
    for i in 0..spec.n {
        for j in 0..spec.num_factors {
            out[[i, j]] = if i < m { rng.sample(law) } else { rho.powi((i + 1 - m) as i32) };
        }
    }
    out
}

/// AR(1) path started at zero, `burn_in` steps discarded.
fn ar1_path<R: Rng>(coef: f64, t: usize, burn_in: usize, rng: &mut R) -> Array1<f64> {
    let mut state = 0.0;
    for _ in 0..burn_in {
        state = coef * state + rng.sample::<f64, _>(StandardNormal);
    }
    Array1::from_shape_fn(t, |_| {
        state = coef * state + rng.sample::<f64, _>(StandardNormal);
        state
    })
}

/// MA path with `q` pre-sample innovations.
fn ma_path<R: Rng>(coefs: &[f64], t: usize, rng: &mut R) -> Array1<f64> {
    let q = coefs.len();
    let z: Vec<f64> = (0..t + q).map(|_| rng.sample(StandardNormal)).collect();
    Array1::from_shape_fn(t, |s| {
        let now = s + q;
        z[now] + coefs.iter().enumerate().map(|(k, c)| c * z[now - k - 1]).sum::<f64>()
    })
}

pub fn gen_factors<R: Rng>(spec: &DgpSpec, rng: &mut R) -> Result<Array2<f64>> {
    spec.validate()?;
    let mut out = Array2::zeros((spec.t, spec.num_factors));
    for j in 0..spec.num_factors {
        let path = match &spec.factors {
            FactorProcess::Ar1 { .. } => {
                let coefs = spec.factor_ar_coefs().expect("ar process");
                ar1_path(coefs[j], spec.t, spec.burn_in, rng)
            }
            FactorProcess::Ma { theta } => ma_path(theta, spec.t, rng),
        };
        out.column_mut(j).assign(&path);
    }
    Ok(out)
}

pub fn gen_errors<R: Rng>(spec: &DgpSpec, rng: &mut R) -> Result<Array2<f64>> {
    spec.validate()?;
    let (n, t) = (spec.n, spec.t);
    let common = |eta: Vec<f64>, g: Array1<f64>| Array2::from_shape_fn((n, t), |(i, s)| eta[i] * g[s]);
    Ok(match &spec.errors {
        ErrorProcess::Iid => Array2::from_shape_fn((n, t), |_| rng.sample(StandardNormal)),
        ErrorProcess::Ar1 { h } => {
            let eta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let g = ar1_path(h.resolve(n), t, spec.burn_in, rng);
            common(eta, g)
        }
        ErrorProcess::Ma { h } => {
            let eta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let coefs: Vec<f64> = h.iter().map(|c| c.resolve(n)).collect();
            let g = ma_path(&coefs, t, rng);
            common(eta, g)
        }
    })
}

/// Draws loadings, factors and errors from independent streams keyed by `spec.seed`.
pub fn simulate_panel(spec: &DgpSpec) -> Result<FactorPanelDraw> {
    spec.validate()?;
    let loadings = gen_loadings(spec, &mut stream(spec.seed, STREAM_LOADINGS));
    let factors = gen_factors(spec, &mut stream(spec.seed, STREAM_FACTORS))?;
    let errors = gen_errors(spec, &mut stream(spec.seed, STREAM_ERRORS))?;
    let data = compose(spec.mu, &loadings, &factors, &errors);
    Ok(FactorPanelDraw { panel: Panel::new(data)?, loadings, factors, errors, spec: spec.clone(), seed: spec.seed })
}

/// `mu + loadings factors' + errors`.
pub fn compose(mu: f64, loadings: &Array2<f64>, factors: &Array2<f64>, errors: &Array2<f64>) -> Array2<f64> {
    loadings.dot(&factors.t()) + errors + mu
}

/// Autocovariance at lag `h` of an MA process with unit innovation variance.
fn ma_autocov(theta: &[f64], h: usize) -> f64 {
    let psi: Vec<f64> = std::iter::once(1.0).chain(theta.iter().copied()).collect();
    if h >= psi.len() {
        return 0.0;
    }
    psi[..psi.len() - h].iter().zip(&psi[h..]).map(|(a, b)| a * b).sum()
}

/// `kappa_tau = mu_v^2 sum_k E(f_{k,t} f_{k,t+tau})` for the spec's factor process.
pub fn kappa_true(spec: &DgpSpec, tau: usize) -> Result<KappaTrue> {
    spec.validate()?;
    let mu_v = spec.loadings.strong.mean();
    let gamma: f64 = match &spec.factors {
        FactorProcess::Ar1 { .. } => {
            spec.factor_ar_coefs().expect("ar process").iter().map(|r| r.powi(tau as i32) / (1.0 - r * r)).sum()
        }
        FactorProcess::Ma { theta } => spec.num_factors as f64 * ma_autocov(theta, tau),
    };
    Ok(KappaTrue { value: mu_v * mu_v * gamma, tau })
}
