//! Python bindings: the radial integrals and their inverse, equilibrium
//! parameters, boundary constants, and the config-driven solver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyList, PyString};
use serde::Serialize;
use serde_json::Value;
use std::path::PathBuf;

use quantum_bgk::equilibrium::{self, EquilibriumParams, MomentTriple};
use quantum_bgk::{config, driver, stats, theorem, BoundaryData, Error, QuadratureSpec, Statistics};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Validation { .. } | Error::Parse { .. } | Error::Domain(_) | Error::Range { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn statistics(name: &str) -> PyResult<Statistics> {
    match name.to_ascii_lowercase().as_str() {
        "boson" => Ok(Statistics::Boson),
        "fermion" => Ok(Statistics::Fermion),
        _ => Err(PyValueError::new_err(format!(
            "statistics must be 'boson' or 'fermion', got {name:?}"
        ))),
    }
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => PyFloat::new(py, n.as_f64().unwrap_or(f64::NAN)).into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, value_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

/// `4π ∫ r² / (e^{r²+c} ± 1) dr`.
#[pyfunction]
fn mass_integral(c: f64, statistics_name: &str) -> PyResult<f64> {
    stats::mass_integral(c, statistics(statistics_name)?, &QuadratureSpec::default()).map_err(to_py_err)
}

/// `4π ∫ r⁴ / (e^{r²+c} ± 1) dr`.
#[pyfunction]
fn energy_integral(c: f64, statistics_name: &str) -> PyResult<f64> {
    stats::energy_integral(c, statistics(statistics_name)?, &QuadratureSpec::default()).map_err(to_py_err)
}

#[pyfunction]
fn beta(c: f64, statistics_name: &str) -> PyResult<f64> {
    stats::beta(c, statistics(statistics_name)?, &QuadratureSpec::default()).map_err(to_py_err)
}

#[pyfunction]
fn beta_inverse(y: f64, statistics_name: &str) -> PyResult<f64> {
    stats::beta_inverse(y, statistics(statistics_name)?, &QuadratureSpec::default()).map_err(to_py_err)
}

/// `beta_B(0)` or `beta_F(-ln 3)`.
#[pyfunction]
fn threshold(statistics_name: &str) -> PyResult<f64> {
    stats::threshold(statistics(statistics_name)?, &QuadratureSpec::default()).map_err(to_py_err)
}

/// Equilibrium parameters `{a, c, drift, regime}` for the moments `(N, P, E)`.
#[pyfunction]
fn solve_parameters<'py>(
    py: Python<'py>,
    mass: f64,
    momentum: [f64; 3],
    energy: f64,
    statistics_name: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let m = MomentTriple::new(mass, momentum, energy).map_err(to_py_err)?;
    let params = equilibrium::solve_parameters(&m, statistics(statistics_name)?, &QuadratureSpec::default())
        .map_err(to_py_err)?;
    to_py(py, &params)
}

/// Moments `(N, P, E)` of the equilibrium with parameters `a, c, drift`.
#[pyfunction]
fn analytic_moments(a: f64, c: f64, drift: [f64; 3], statistics_name: &str) -> PyResult<(f64, [f64; 3], f64)> {
    let params = EquilibriumParams::regular(statistics(statistics_name)?, a, c, drift).map_err(to_py_err)?;
    let m = equilibrium::analytic_moments(&params, &QuadratureSpec::default()).map_err(to_py_err)?;
    Ok((m.mass, m.momentum, m.energy))
}

/// Boundary constants of the slab example.
#[pyfunction]
fn slab_constants<'py>(
    py: Python<'py>,
    c_left: f64,
    c_right: f64,
    r1: f64,
    r2: f64,
    tau: f64,
    statistics_name: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let b = BoundaryData::slab_example(c_left, c_right, r1, r2).map_err(to_py_err)?;
    let tc = theorem::boundary_constants(&b, tau, statistics(statistics_name)?).map_err(to_py_err)?;
    to_py(py, &tc)
}

/// A validated solver configuration.
#[pyclass(name = "Config")]
struct PyConfig {
    inner: config::SolverConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_str(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: config::parse_config(text).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: config::load_config(&path).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[setter]
    fn set_tau(&mut self, tau: f64) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.tau = tau;
        next.validate().map_err(to_py_err)?;
        self.inner = next;
        Ok(())
    }

    #[getter]
    fn statistics(&self) -> String {
        self.inner.statistics.to_string()
    }

    #[getter]
    fn output_dir(&self) -> PathBuf {
        self.inner.resolved_output_dir()
    }

    #[setter]
    fn set_output_dir(&mut self, dir: PathBuf) {
        self.inner.output_dir = dir;
    }

    /// Runs `solve`; returns `(exit_code, summary)`.
    fn solve<'py>(&self, py: Python<'py>) -> PyResult<(i32, Bound<'py, PyAny>)> {
        let out = py.detach(|| driver::run_solve(&self.inner)).map_err(to_py_err)?;
        Ok((out.exit_code, to_py(py, &out.summary)?))
    }

    /// Runs `sweep`; returns `(exit_code, rows)`.
    fn sweep<'py>(&self, py: Python<'py>, taus: Vec<f64>) -> PyResult<(i32, Bound<'py, PyAny>)> {
        let out = py.detach(|| driver::run_sweep(&self.inner, &taus)).map_err(to_py_err)?;
        Ok((out.exit_code, to_py(py, &out.summary)?))
    }

    /// Hypothesis checks; returns `(exit_code, report)`.
    fn check<'py>(&self, py: Python<'py>) -> PyResult<(i32, Bound<'py, PyAny>)> {
        let (code, report) = driver::run_check(&self.inner).map_err(to_py_err)?;
        Ok((code, to_py(py, &report)?))
    }

    fn constants<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let tc = driver::run_constants(&self.inner).map_err(to_py_err)?;
        to_py(py, &tc)
    }
}

#[pymodule]
fn pyqbgk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(mass_integral, m)?)?;
    m.add_function(wrap_pyfunction!(energy_integral, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(beta_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(solve_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_moments, m)?)?;
    m.add_function(wrap_pyfunction!(slab_constants, m)?)?;
    m.add_class::<PyConfig>()?;
    Ok(())
}
