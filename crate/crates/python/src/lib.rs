//! Python module `el_sim`.

use std::path::PathBuf;

use el_sim_core::checks::run_checks;
use el_sim_core::error::Error;
use el_sim_core::integrator::{step, SimState, StepperConfig};
use el_sim_core::io::RunConfig;
use el_sim_core::oseen_frank::{self as of, DirectorSample, SplitMode};
use el_sim_core::runner;
use el_sim_core::stresses;
use el_sim_core::tensor::{self, Mat3, Vec3};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn split_mode(name: &str) -> PyResult<SplitMode> {
    match name {
        "min_split" => Ok(SplitMode::MinSplit),
        "equal_split" => Ok(SplitMode::EqualSplit),
        other => Err(PyValueError::new_err(format!("unknown split mode `{other}`"))),
    }
}

#[pyclass(frozen)]
struct FrankConstants {
    inner: of::FrankConstants,
}

#[pymethods]
impl FrankConstants {
    #[new]
    #[pyo3(signature = (k1, k2, k3, split = "min_split"))]
    fn new(k1: f64, k2: f64, k3: f64, split: &str) -> PyResult<Self> {
        Ok(FrankConstants { inner: of::FrankConstants::new(k1, k2, k3, split_mode(split)?).map_err(py_err)? })
    }

    /// Split coefficients `(k1, .., k5)`.
    #[getter]
    fn coefficients(&self) -> [f64; 5] {
        self.inner.coefficients()
    }

    fn energy_density(&self, h: [f64; 3], s: [[f64; 3]; 3]) -> f64 {
        of::energy_density(&self.inner, &DirectorSample::new(Vec3(h), Mat3(s)))
    }

    fn energy_terms(&self, h: [f64; 3], s: [[f64; 3]; 3]) -> [f64; 5] {
        of::energy_terms(&self.inner, &Vec3(h), &Mat3(s))
    }

    fn f_s(&self, h: [f64; 3], s: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
        of::f_s(&self.inner, &DirectorSample::new(Vec3(h), Mat3(s))).0
    }

    fn f_h(&self, h: [f64; 3], s: [[f64; 3]; 3]) -> [f64; 3] {
        of::f_h(&self.inner, &DirectorSample::new(Vec3(h), Mat3(s))).0
    }

    /// `(a⊗b:Λ:a⊗b, min(k1, k2)|a|²|b|²)`
    fn ellipticity(&self, a: [f64; 3], b: [f64; 3]) -> (f64, f64) {
        let e = of::quad_form_ellipticity(&self.inner, &Vec3(a), &Vec3(b));
        (e.value, e.lower_bound)
    }

    fn __repr__(&self) -> String {
        let [k1, k2, k3] = self.inner.moduli();
        format!("FrankConstants(K1={k1}, K2={k2}, K3={k3})")
    }
}

#[pyclass(frozen)]
struct LeslieCoefficients {
    inner: stresses::LeslieCoefficients,
}

#[pymethods]
impl LeslieCoefficients {
    #[new]
    fn new(mu1: f64, mu2: f64, mu3: f64, mu4: f64, mu5: f64, mu6: f64, lam: f64) -> Self {
        LeslieCoefficients { inner: stresses::LeslieCoefficients { mu1, mu2, mu3, mu4, mu5, mu6, lambda: lam } }
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    #[getter]
    fn parodi(&self) -> bool {
        self.inner.parodi()
    }

    /// Names of violated dissipativity conditions; empty when valid.
    fn violations(&self) -> Vec<String> {
        self.inner.validate().violations()
    }
}

/// A time-stepped simulation built from a JSON run configuration.
#[pyclass]
struct Simulation {
    state: SimState,
    stepper: StepperConfig,
}

#[pymethods]
impl Simulation {
    #[new]
    fn new(config_json: &str) -> PyResult<Self> {
        let cfg = RunConfig::from_json(config_json).map_err(py_err)?;
        cfg.validate().map_err(py_err)?;
        Ok(Simulation { state: cfg.initial_state().map_err(py_err)?, stepper: cfg.time })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    #[getter]
    fn n(&self) -> usize {
        self.state.grid.n()
    }

    #[pyo3(signature = (count = 1))]
    fn step(&mut self, py: Python<'_>, count: usize) -> PyResult<()> {
        let Simulation { state, stepper } = self;
        py.detach(|| (0..count).try_for_each(|_| step(state, stepper))).map_err(py_err)
    }

    /// Energy breakdown of the current state.
    fn energy<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let e = el_sim_core::integrator::assemble_rhs(&self.state).energy;
        let d = PyDict::new(py);
        d.set_item("kinetic", e.kinetic)?;
        d.set_item("frank", e.frank())?;
        d.set_item("penalty", e.penalty)?;
        d.set_item("reg_delta", e.reg_delta)?;
        d.set_item("total", e.total)?;
        Ok(d)
    }

    /// `(‖|d|²−1‖_L², ‖|d|²−1‖_L∞)`
    fn norm_residual(&self) -> (f64, f64) {
        let r = el_sim_core::diagnostics::norm_constraint_residual(&self.state.grid, &self.state.d);
        (r.l2, r.linf)
    }

    /// Director grid values, `N³` rows of three components in C order.
    fn director(&self) -> Vec<[f64; 3]> {
        self.state.grid.vector_to_grid(&self.state.d).into_iter().map(|v| v.0).collect()
    }

    fn velocity(&self) -> Vec<[f64; 3]> {
        self.state.grid.vector_to_grid(&self.state.v).into_iter().map(|v| v.0).collect()
    }
}

/// Runs a configuration into `out` and returns run_summary.json as text.
#[pyfunction]
fn run(py: Python<'_>, config_json: &str, out: PathBuf) -> PyResult<String> {
    let cfg = RunConfig::from_json(config_json).map_err(py_err)?;
    let outcome = py.detach(|| runner::run_to_dir(&cfg, &out)).map_err(py_err)?;
    serde_json::to_string(&outcome.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// One run per δ under `out`; returns sweep_summary.json as text.
#[pyfunction]
#[pyo3(signature = (config_json, deltas, out, threads = None))]
fn sweep(py: Python<'_>, config_json: &str, deltas: Vec<f64>, out: PathBuf, threads: Option<usize>) -> PyResult<String> {
    let cfg = RunConfig::from_json(config_json).map_err(py_err)?;
    let summary = py.detach(|| runner::sweep(&cfg, &deltas, &out, threads)).map_err(py_err)?;
    serde_json::to_string(&summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs the invariant suite; returns `(name, passed, measured, tolerance)` rows.
#[pyfunction]
#[pyo3(signature = (filter = None))]
fn check(py: Python<'_>, filter: Option<String>) -> Vec<(&'static str, bool, f64, f64)> {
    py.detach(|| run_checks(filter.as_deref(), None)).into_iter().map(|c| (c.name, c.passed, c.measured, c.tolerance)).collect()
}

#[pyfunction]
fn hat(a: [f64; 3]) -> [[f64; 3]; 3] {
    tensor::hat(&Vec3(a)).0
}

#[pyfunction]
fn vee(m: [[f64; 3]; 3]) -> [f64; 3] {
    tensor::vee(&Mat3(m)).0
}

#[pymodule]
fn el_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FrankConstants>()?;
    m.add_class::<LeslieCoefficients>()?;
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(hat, m)?)?;
    m.add_function(wrap_pyfunction!(vee, m)?)?;
    Ok(())
}
