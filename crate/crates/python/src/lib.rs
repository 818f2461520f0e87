//! Python bindings for `locc-forge`.
//!
//! Matrices cross the boundary as lists of rows of Python `complex` (plain
//! floats are accepted on input). Reports come back as dictionaries with the
//! same keys as the CLI's JSON output.

use locc_forge::cli::{ProtocolFile, StateFile};
use locc_forge::majorize::{self, Relation};
use locc_forge::numkit::ComplexMatrix;
use locc_forge::{simulate, synth, BipartiteState, Error, LoccProtocol, ProbabilityRequest};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

create_exception!(
    locc_forge_py,
    InfeasibleError,
    PyValueError,
    "The requested transformation is not achievable."
);

type Rows = Vec<Vec<Complex64>>;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Infeasible { reason, p_max } => InfeasibleError::new_err((format!("infeasible: {reason}"), p_max)),
        Error::NumericalDegeneracy(msg) => PyRuntimeError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix_from_rows(rows: &Rows) -> PyResult<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("expected a non-empty rectangular list of rows"));
    }
    Ok(ComplexMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &ComplexMatrix) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_request(p: &Bound<'_, PyAny>) -> PyResult<ProbabilityRequest> {
    if let Ok(x) = p.extract::<f64>() {
        return format!("{x}").parse().map_err(to_py_err);
    }
    let s: String = p.extract()?;
    s.parse().map_err(to_py_err)
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A normalized bipartite pure state, stored as its `dA × dB` amplitude matrix.
#[pyclass(name = "State", module = "locc_forge_py")]
pub struct PyState {
    inner: BipartiteState,
}

#[pymethods]
impl PyState {
    /// Build from amplitudes; `renormalize=True` rescales to unit norm.
    #[new]
    #[pyo3(signature = (amplitudes, renormalize = false))]
    fn new(amplitudes: Rows, renormalize: bool) -> PyResult<Self> {
        let amp = matrix_from_rows(&amplitudes)?;
        let inner = if renormalize {
            BipartiteState::normalized(amp)
        } else {
            BipartiteState::new(amp)
        };
        Ok(PyState {
            inner: inner.map_err(to_py_err)?,
        })
    }

    /// Diagonal state with the given squared Schmidt coefficients.
    #[staticmethod]
    fn from_schmidt(coeffs_sq: Vec<f64>, da: usize, db: usize) -> PyResult<Self> {
        Ok(PyState {
            inner: BipartiteState::from_schmidt(&coeffs_sq, da, db).map_err(to_py_err)?,
        })
    }

    /// Parse the JSON state file format.
    #[staticmethod]
    #[pyo3(signature = (text, renormalize = false))]
    fn from_json(text: &str, renormalize: bool) -> PyResult<Self> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyState {
            inner: file.to_state(renormalize).map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&StateFile::from_state(&self.inner)).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }

    fn amplitudes(&self) -> Rows {
        matrix_to_rows(self.inner.amp())
    }

    /// Squared Schmidt coefficients, non-increasing.
    fn schmidt_coefficients(&self) -> Vec<f64> {
        self.inner.schmidt().squared()
    }

    fn schmidt_rank(&self) -> usize {
        self.inner.schmidt_rank()
    }

    fn fidelity(&self, other: &PyState) -> PyResult<f64> {
        self.inner.fidelity(&other.inner).map_err(to_py_err)
    }

    /// `(C_A ⊗ C_B)|A⟩⟩` as unnormalized amplitudes and its squared norm.
    fn apply_local(&self, ca: Rows, cb: Rows) -> PyResult<(Rows, f64)> {
        let (out, w) = self
            .inner
            .apply_local(&matrix_from_rows(&ca)?, &matrix_from_rows(&cb)?)
            .map_err(to_py_err)?;
        Ok((matrix_to_rows(&out), w))
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn __repr__(&self) -> String {
        let (da, db) = self.inner.dims();
        format!("State(dims=({da}, {db}), schmidt={:?})", self.inner.schmidt().squared())
    }
}

/// A synthesized two-stage protocol.
#[pyclass(name = "Protocol", module = "locc_forge_py")]
pub struct PyProtocol {
    inner: LoccProtocol,
}

#[pymethods]
impl PyProtocol {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: ProtocolFile = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyProtocol {
            inner: file.to_protocol().map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&ProtocolFile::from(&self.inner)).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn p_total(&self) -> f64 {
        self.inner.p_total
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        self.inner.dims
    }

    #[getter]
    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    #[getter]
    fn outcome_count(&self) -> usize {
        self.inner.outcome_count()
    }

    /// Stage-1 outcomes as `(q, M, U)` triples.
    fn outcomes(&self) -> Vec<(f64, Rows, Rows)> {
        self.inner
            .stage1
            .outcomes
            .iter()
            .map(|o| (o.q, matrix_to_rows(&o.m), matrix_to_rows(&o.u)))
            .collect()
    }

    fn completion_operator(&self) -> Rows {
        matrix_to_rows(&self.inner.stage1.m0)
    }

    /// `{"p", "N", "V", "N_fail"}` or `None` for deterministic protocols.
    fn stage2<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(s) = &self.inner.stage2 else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        d.set_item("p", s.p)?;
        d.set_item("N", matrix_to_rows(&s.n))?;
        d.set_item("V", matrix_to_rows(&s.v))?;
        d.set_item("N_fail", matrix_to_rows(&s.n_fail))?;
        Ok(Some(d))
    }

    fn intermediate(&self) -> Rows {
        matrix_to_rows(&self.inner.intermediate)
    }

    fn __repr__(&self) -> String {
        format!(
            "Protocol(dims={:?}, outcomes={}, p_total={})",
            self.inner.dims,
            self.inner.outcome_count(),
            self.inner.p_total
        )
    }
}

#[pyfunction]
fn max_probability(a: &PyState, b: &PyState) -> f64 {
    synth::max_probability(&a.inner, &b.inner)
}

#[pyfunction]
#[pyo3(signature = (a, b, p = None))]
fn feasibility<'py>(
    py: Python<'py>,
    a: &PyState,
    b: &PyState,
    p: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let request = p.map(parse_request).transpose()?.unwrap_or(ProbabilityRequest::Max);
    let report = synth::feasibility(&a.inner, &b.inner, request).map_err(to_py_err)?;
    to_dict(py, &report)
}

#[pyfunction]
#[pyo3(signature = (a, b, p = None))]
fn synthesize(a: &PyState, b: &PyState, p: Option<&Bound<'_, PyAny>>) -> PyResult<PyProtocol> {
    let request = p.map(parse_request).transpose()?.unwrap_or(ProbabilityRequest::Max);
    Ok(PyProtocol {
        inner: synth::synthesize(&a.inner, &b.inner, request).map_err(to_py_err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (protocol, a, b, tol = 1e-9))]
fn verify<'py>(
    py: Python<'py>,
    protocol: &PyProtocol,
    a: &PyState,
    b: &PyState,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let report = simulate::verify(&protocol.inner, &a.inner, &b.inner, tol).map_err(to_py_err)?;
    to_dict(py, &report)
}

#[pyfunction]
#[pyo3(signature = (protocol, a, b, trials = 10_000, seed = 0))]
fn estimate<'py>(
    py: Python<'py>,
    protocol: &PyProtocol,
    a: &PyState,
    b: &PyState,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let est = py
        .detach(|| simulate::estimate(&protocol.inner, &a.inner, &b.inner, trials, seed))
        .map_err(to_py_err)?;
    to_dict(py, &est)
}

/// Move a contraction on Bob's side to Alice: returns `(N, U, residual)`.
#[pyfunction]
fn reduce_bob(m: Rows, state: &PyState) -> PyResult<(Rows, Rows, f64)> {
    let r = synth::reduce_bob(&matrix_from_rows(&m)?, &state.inner).map_err(to_py_err)?;
    Ok((matrix_to_rows(&r.n), matrix_to_rows(&r.u), r.residual))
}

/// Majorization test; `relation` is `"maj"`, `"sub"` or `"super"`.
#[pyfunction]
#[pyo3(signature = (x, y, relation = "maj"))]
fn compare(x: Vec<f64>, y: Vec<f64>, relation: &str) -> PyResult<bool> {
    let rel = match relation {
        "maj" => Relation::Maj,
        "sub" => Relation::Sub,
        "super" => Relation::Super,
        other => return Err(PyValueError::new_err(format!("unknown relation {other:?}"))),
    };
    majorize::compare(&x, &y, rel).map_err(to_py_err)
}

#[pyfunction]
fn intermediate_vector(a: Vec<f64>, b: Vec<f64>, p: f64) -> PyResult<Vec<f64>> {
    synth::intermediate_vector(&a, &b, p).map_err(to_py_err)
}

#[pymodule]
fn locc_forge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PyState>()?;
    m.add_class::<PyProtocol>()?;
    m.add_function(wrap_pyfunction!(max_probability, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_bob, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(intermediate_vector, m)?)?;
    Ok(())
}
