//! Python bindings for `crossdep`.

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use crossdep::dgp::{Coefficient, DgpSpec};
use crossdep::io::{Orientation, PanelFile};
use crossdep::montecarlo::{run_mc as run_mc_rs, EstimatorSet, McConfig};
use crossdep::{Error, Method};

create_exception!(pycrossdep, NumericError, PyArithmeticError);

fn to_py(e: Error) -> PyErr {
    if e.is_numeric() {
        NumericError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Serialize through JSON into plain Python objects.
fn to_object<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Panel", module = "pycrossdep")]
struct PyPanel {
    inner: crossdep::Panel,
}

#[pymethods]
impl PyPanel {
    /// Rows are sections, columns are time periods.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: crossdep::Panel::from_rows(&rows).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (path, columns=false, header=false, delimiter=','))]
    fn read_csv(path: &str, columns: bool, header: bool, delimiter: char) -> PyResult<Self> {
        if !delimiter.is_ascii() {
            return Err(PyValueError::new_err("delimiter must be ASCII"));
        }
        let file = PanelFile {
            path: path.into(),
            orientation: if columns { Orientation::SectionsAsColumns } else { Orientation::SectionsAsRows },
            header,
            delimiter: delimiter as u8,
        };
        Ok(Self { inner: crossdep::io::read_panel(&file).map_err(to_py)? })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        crossdep::io::write_panel(&self.inner, path.as_ref()).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    fn standardize(&self) -> PyResult<Self> {
        Ok(Self { inner: crossdep::empirical::standardize(&self.inner).map_err(to_py)? })
    }

    /// Residual panel and a dict with `acf_xbar`, `acf_ubar`, `ubar_vanishes`, `delta_hat`.
    fn defactor<'py>(&self, py: Python<'py>, max_lag: usize) -> PyResult<(Self, Bound<'py, PyAny>)> {
        let (resid, diag) = crossdep::empirical::defactor(&self.inner, max_lag).map_err(to_py)?;
        Ok((Self { inner: resid }, to_object(py, &diag)?))
    }

    fn __repr__(&self) -> String {
        format!("Panel(n={}, t={})", self.inner.n(), self.inner.t())
    }
}

#[pyclass(name = "EstimateResult", module = "pycrossdep", frozen)]
struct PyEstimate {
    inner: crossdep::EstimateResult,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn tau(&self) -> usize {
        self.inner.tau
    }

    #[getter]
    fn cutoff_n(&self) -> usize {
        self.inner.cutoff_n
    }

    #[getter]
    fn objective_value(&self) -> f64 {
        self.inner.objective_value
    }

    #[getter]
    fn method(&self) -> &'static str {
        match self.inner.method {
            Method::Marginal => "marginal",
            Method::Joint => "joint",
        }
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "EstimateResult(method={}, alpha={}, kappa={}, tau={}, cutoff_n={})",
            self.method(),
            self.inner.alpha,
            self.inner.kappa,
            self.inner.tau,
            self.inner.cutoff_n
        )
    }
}

#[pyfunction]
fn joint_estimate(panel: &PyPanel, tau: usize) -> PyResult<PyEstimate> {
    Ok(PyEstimate { inner: crossdep::estimators::joint_estimate(&panel.inner, tau).map_err(to_py)? })
}

#[pyfunction]
fn marginal_alpha(panel: &PyPanel, tau: usize, kappa: f64) -> PyResult<PyEstimate> {
    Ok(PyEstimate { inner: crossdep::estimators::marginal_alpha(&panel.inner, tau, kappa).map_err(to_py)? })
}

/// Selected lag and the joint estimate for every candidate.
#[pyfunction]
fn select_tau(panel: &PyPanel, taus: Vec<usize>) -> PyResult<(usize, Vec<PyEstimate>)> {
    let sel = crossdep::estimators::select_tau(&panel.inner, &taus).map_err(to_py)?;
    Ok((sel.tau, sel.results.into_iter().map(|inner| PyEstimate { inner }).collect()))
}

#[pyfunction]
#[pyo3(signature = (panel, cutoff_n, tau, ell=None))]
fn sigma_tau_sq<'py>(
    py: Python<'py>,
    panel: &PyPanel,
    cutoff_n: usize,
    tau: usize,
    ell: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let v = crossdep::inference::sigma_tau_sq_at(&panel.inner, cutoff_n, tau, ell).map_err(to_py)?;
    to_object(py, &v)
}

#[pyfunction]
#[pyo3(signature = (alpha, kappa, sigma_sq, n, t, tau, level=0.9))]
#[allow(clippy::too_many_arguments)]
fn confidence_interval<'py>(
    py: Python<'py>,
    alpha: f64,
    kappa: f64,
    sigma_sq: f64,
    n: usize,
    t: usize,
    tau: usize,
    level: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let ci = crossdep::inference::confidence_interval(alpha, kappa, sigma_sq, n, t, tau, level).map_err(to_py)?;
    to_object(py, &ci)
}

fn design(example: u8, n: usize, t: usize, alpha0: f64, h: Option<f64>) -> PyResult<DgpSpec> {
    let spec = match example {
        1 => DgpSpec::example1(n, t, alpha0, 0),
        2 => DgpSpec::example2(n, t, alpha0, h.map_or(Coefficient::InvSqrtN, Coefficient::Fixed), 0),
        3 => DgpSpec::example3(n, t, alpha0, 0),
        _ => return Err(PyValueError::new_err(format!("unknown example {example}"))),
    };
    spec.validate().map_err(to_py)?;
    Ok(spec)
}

/// Draw a panel from Example 1, 2 or 3. For Example 2, `h` defaults to `1/sqrt(N)`.
#[pyfunction]
#[pyo3(signature = (example, n, t, alpha0, seed, h=None))]
fn simulate(example: u8, n: usize, t: usize, alpha0: f64, seed: u64, h: Option<f64>) -> PyResult<PyPanel> {
    let spec = design(example, n, t, alpha0, h)?.with_seed(seed);
    let draw = crossdep::dgp::simulate_panel(&spec).map_err(to_py)?;
    Ok(PyPanel { inner: draw.panel })
}

#[pyfunction]
#[pyo3(signature = (example, n, t, alpha0, tau, h=None))]
fn kappa_true(example: u8, n: usize, t: usize, alpha0: f64, tau: usize, h: Option<f64>) -> PyResult<f64> {
    let spec = design(example, n, t, alpha0, h)?;
    Ok(crossdep::dgp::kappa_true(&spec, tau).map_err(to_py)?.value)
}

/// Summary dict for one design; replication r uses seed + r.
#[pyfunction]
#[pyo3(signature = (example, n, t, alpha0, taus, reps=500, seed=1, level=0.9, select_taus=None, h=None))]
#[allow(clippy::too_many_arguments)]
fn run_mc<'py>(
    py: Python<'py>,
    example: u8,
    n: usize,
    t: usize,
    alpha0: f64,
    taus: Vec<usize>,
    reps: usize,
    seed: u64,
    level: f64,
    select_taus: Option<Vec<usize>>,
    h: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = McConfig::new(design(example, n, t, alpha0, h)?, taus);
    cfg.replications = reps;
    cfg.base_seed = seed;
    cfg.ci_level = level;
    cfg.estimators = EstimatorSet::default();
    cfg.select_candidates = select_taus;
    let summary = py.detach(|| run_mc_rs(&cfg)).map_err(to_py)?;
    to_object(py, &summary)
}

/// `[N^a]`; negative exponents give `1/[N^-a]`.
#[pyfunction]
fn bracket_pow(n: u64, a: f64) -> PyResult<f64> {
    if n == 0 || !a.is_finite() {
        return Err(PyValueError::new_err("bracket_pow needs N >= 1 and a finite exponent"));
    }
    Ok(crossdep::bracket_pow(n, a).as_f64())
}

#[pyfunction]
fn autocov_profile(panel: &PyPanel, tau: usize) -> PyResult<Vec<f64>> {
    Ok(crossdep::moments::autocov_profile(&panel.inner, tau).map_err(to_py)?.sigma_hat)
}

#[pyfunction]
fn acf(series: Vec<f64>, max_lag: usize) -> PyResult<Vec<f64>> {
    crossdep::moments::acf(&series, max_lag).map_err(to_py)
}

#[pymodule]
fn pycrossdep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPanel>()?;
    m.add_class::<PyEstimate>()?;
    m.add("NumericError", m.py().get_type::<NumericError>())?;
    m.add_function(wrap_pyfunction!(joint_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(select_tau, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_tau_sq, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_interval, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_true, m)?)?;
    m.add_function(wrap_pyfunction!(run_mc, m)?)?;
    m.add_function(wrap_pyfunction!(bracket_pow, m)?)?;
    m.add_function(wrap_pyfunction!(autocov_profile, m)?)?;
    m.add_function(wrap_pyfunction!(acf, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn designs() {
        assert_eq!(design(1, 50, 60, 0.5, None).unwrap(), DgpSpec::example1(50, 60, 0.5, 0));
        assert!(design(4, 50, 60, 0.5, None).is_err());
        assert!(design(1, 50, 60, 1.5, None).is_err());
    }

    #[test]
    fn module_round_trip() {
        Python::initialize();
        Python::attach(|py| {
            let p = simulate(1, 30, 40, 0.8, 3, None).unwrap();
            let j = joint_estimate(&p, 1).unwrap();
            assert_eq!(j.method(), "joint");
            let d = j.to_dict(py).unwrap();
            let alpha: f64 = d.get_item("alpha").unwrap().extract().unwrap();
            assert_eq!(alpha, j.alpha());
            let err = joint_estimate(&p, 40).err().unwrap();
            assert!(err.is_instance_of::<PyValueError>(py));
            assert_eq!(bracket_pow(200, -0.8).unwrap(), 1.0 / 69.0);
        });
    }
}
