use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use maxwell_morawetz::background;
use maxwell_morawetz::certifier::{self, rat_int, round_out, DEFAULT_DEPTH, DEFAULT_RADIUS};
use maxwell_morawetz::config::{self, parse_config};
use maxwell_morawetz::error::Error;
use maxwell_morawetz::modes;
use maxwell_morawetz::run;
use maxwell_morawetz::superenergy;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::NoConvergence { .. } | Error::MissingTimeLevel(_) | Error::Checkpoint(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Schwarzschild exterior of the given mass, in geometric units.
#[pyclass(frozen)]
struct Schwarzschild {
    inner: background::Schwarzschild,
}

#[pymethods]
impl Schwarzschild {
    #[new]
    #[pyo3(signature = (mass = 1.0))]
    fn new(mass: f64) -> PyResult<Self> {
        background::Schwarzschild::new(mass).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    fn photon_sphere(&self) -> f64 {
        self.inner.photon_sphere()
    }

    fn lapse(&self, r: f64) -> PyResult<f64> {
        self.inner.lapse(r).map_err(py_err)
    }

    fn tortoise(&self, r: f64) -> PyResult<f64> {
        self.inner.tortoise(r).map_err(py_err)
    }

    fn invert_tortoise(&self, r_star: f64) -> PyResult<f64> {
        self.inner.invert_tortoise(r_star).map_err(py_err)
    }

    fn morawetz_a(&self, r: f64) -> PyResult<f64> {
        self.inner.morawetz_a(r).map_err(py_err)
    }

    fn morawetz_q(&self, r: f64) -> PyResult<f64> {
        self.inner.morawetz_q(r).map_err(py_err)
    }

    fn morawetz_g(&self, r: f64) -> PyResult<f64> {
        self.inner.morawetz_g(r).map_err(py_err)
    }

    fn fi_potential(&self, r: f64, l: u32) -> PyResult<f64> {
        self.inner.fi_potential(r, l).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Schwarzschild(mass={})", self.inner.mass())
    }
}

/// Coefficients `(b0, b1, b2)` of the quadratic form `E1`.
#[pyclass(frozen)]
struct QuadraticForm {
    inner: superenergy::QuadraticFormCoeffs,
}

#[pymethods]
impl QuadraticForm {
    #[new]
    fn new(b0: f64, b1: f64, b2: f64) -> Self {
        Self {
            inner: superenergy::QuadraticFormCoeffs::new(b0, b1, b2),
        }
    }

    /// The coefficients left in the Morawetz bulk at radius `r`.
    #[staticmethod]
    #[pyo3(signature = (r, mass = 1.0))]
    fn morawetz_bulk(r: f64, mass: f64) -> Self {
        Self {
            inner: superenergy::QuadraticFormCoeffs::morawetz_bulk(r, mass),
        }
    }

    #[getter]
    fn coefficients(&self) -> (f64, f64, f64) {
        (self.inner.b0, self.inner.b1, self.inner.b2)
    }

    fn eigenvalues(&self) -> [f64; 4] {
        self.inner.eigenvalues()
    }

    fn is_nonnegative(&self) -> bool {
        self.inner.is_nonnegative()
    }

    /// Value of the form on frame components `(T, X, Y, Z)`.
    fn evaluate(&self, nu: [Complex64; 4]) -> f64 {
        superenergy::e1_form(&self.inner, &nu)
    }

    fn __repr__(&self) -> String {
        format!("QuadraticForm(b0={}, b1={}, b2={})", self.inner.b0, self.inner.b1, self.inner.b2)
    }
}

/// Run configuration parsed from `key = value` text.
#[pyclass(frozen)]
struct RunConfig {
    inner: config::RunConfig,
}

#[pymethods]
impl RunConfig {
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        let inner = parse_config(text).map_err(py_err)?;
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Copy with the grid refined by an integer factor.
    fn refined(&self, factor: usize) -> PyResult<Self> {
        if factor == 0 {
            return Err(PyValueError::new_err("factor must be at least 1"));
        }
        Ok(Self {
            inner: self.inner.refined(factor),
        })
    }

    #[getter]
    fn n_points(&self) -> usize {
        self.inner.n_points
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    #[getter]
    fn modes(&self) -> Vec<(u32, i32)> {
        self.inner.mode_list()
    }

    fn evolve(&self, py: Python<'_>) -> PyResult<EvolveSummary> {
        let cfg = self.inner.clone();
        let s = py
            .detach(move || {
                let bg = run::background_for(&cfg)?;
                run::evolve(&bg, &cfg.initial_data(), cfg.t_final, cfg.output_every, cfg.cfl)
            })
            .map_err(py_err)?;
        Ok(EvolveSummary::from(s))
    }

    fn coulomb_check(&self, py: Python<'_>) -> PyResult<CoulombReport> {
        let cfg = self.inner.clone();
        let r = py.detach(move || run::run_coulomb_check(&cfg)).map_err(py_err)?;
        Ok(CoulombReport {
            steps: r.steps,
            worst: r.worst(),
            max_phi1_change: r.max_phi1_change,
        })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(frozen, get_all)]
struct EvolveSummary {
    e_xi_initial: f64,
    morawetz_ratio: f64,
    energy_drift: f64,
    flux_balance: f64,
    min_aq_ratio: f64,
    max_aq_ratio: f64,
    max_aq_increase: f64,
    max_constraint: f64,
    violations: Vec<String>,
    /// `(t, E_xi, E_xi_Aq, cumulative bulk)` per output slice.
    rows: Vec<(f64, f64, f64, f64)>,
}

impl From<run::EvolveSummary> for EvolveSummary {
    fn from(s: run::EvolveSummary) -> Self {
        Self {
            e_xi_initial: s.e_xi_initial,
            morawetz_ratio: s.morawetz_ratio,
            energy_drift: s.energy_drift,
            flux_balance: s.flux_balance,
            min_aq_ratio: s.min_aq_ratio,
            max_aq_ratio: s.max_aq_ratio,
            max_aq_increase: s.max_aq_increase,
            max_constraint: s.max_constraint,
            rows: s
                .rows
                .iter()
                .map(|r| (r.diagnostics.t, r.diagnostics.e_xi, r.diagnostics.e_xi_aq, r.cumulative_bulk))
                .collect(),
            violations: s.violations,
        }
    }
}

#[pymethods]
impl EvolveSummary {
    fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[pyclass(frozen, get_all)]
struct CoulombReport {
    steps: usize,
    /// Largest derived quantity over the run.
    worst: f64,
    max_phi1_change: f64,
}

#[pymethods]
impl CoulombReport {
    #[pyo3(signature = (tol = 1e-12))]
    fn passed(&self, tol: f64) -> bool {
        self.worst <= tol && self.max_phi1_change <= tol
    }
}

#[pyclass(frozen, get_all)]
struct CertificateReport {
    id: String,
    description: String,
    verdict: String,
    /// Outward-rounded enclosure of the smallest slack.
    margin: (Option<f64>, Option<f64>),
    saturations: Vec<String>,
    subdivisions: usize,
    wall_time: f64,
    text: String,
    json: String,
}

#[pymethods]
impl CertificateReport {
    fn __repr__(&self) -> String {
        format!("CertificateReport(id={:?}, verdict={:?})", self.id, self.verdict)
    }
}

/// Certifies the built-in corpus with tail radius `radius` (units of `M`).
#[pyfunction]
#[pyo3(signature = (radius = DEFAULT_RADIUS, depth = DEFAULT_DEPTH))]
fn certify_corpus(py: Python<'_>, radius: i64, depth: usize) -> PyResult<Vec<CertificateReport>> {
    if radius < 3 {
        return Err(PyValueError::new_err("radius must be at least 3"));
    }
    let reports = py
        .detach(move || certifier::certify_corpus(rat_int(radius), depth))
        .map_err(py_err)?;
    Ok(reports
        .into_iter()
        .map(|r| CertificateReport {
            margin: (
                r.margin.0.as_ref().map(|x| round_out(x, false)),
                r.margin.1.as_ref().map(|x| round_out(x, true)),
            ),
            saturations: r.saturations.iter().map(ToString::to_string).collect(),
            verdict: r.verdict.to_string(),
            text: r.to_text(),
            json: r.to_json().to_string(),
            id: r.id,
            description: r.description,
            subdivisions: r.subdivisions,
            wall_time: r.wall_time,
        })
        .collect())
}

#[pyfunction]
fn hardy_ratio(l: u32) -> PyResult<f64> {
    modes::hardy_ratio(l).map_err(py_err)
}

#[pyfunction]
fn ladder_factor(l: u32, r: f64) -> PyResult<f64> {
    modes::ladder_factor(l, r).map_err(py_err)
}

/// Spin-weighted spherical harmonic normalised to `4 pi` over the sphere.
#[pyfunction]
fn spin_harmonic(spin: i32, l: u32, m: i32, theta: f64, phi: f64) -> PyResult<Complex64> {
    modes::evaluate_sy(spin, l, m, theta, phi).map_err(py_err)
}

#[pymodule]
fn maxwell_morawetz_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Schwarzschild>()?;
    m.add_class::<QuadraticForm>()?;
    m.add_class::<RunConfig>()?;
    m.add_class::<EvolveSummary>()?;
    m.add_class::<CoulombReport>()?;
    m.add_class::<CertificateReport>()?;
    m.add_function(wrap_pyfunction!(certify_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(ladder_factor, m)?)?;
    m.add_function(wrap_pyfunction!(spin_harmonic, m)?)?;
    m.add("MORAWETZ_BOUND", run::MORAWETZ_BOUND)?;
    Ok(())
}
