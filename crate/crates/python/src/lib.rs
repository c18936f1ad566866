//! Python bindings. Matrices cross the boundary as nested lists of `complex`.

use cayley_realize::bessmertnyi::{eval_pencil, LongResolventPencil, PencilClass};
use cayley_realize::cayley::TupleOfMatrices;
use cayley_realize::cli::{self, Artifact, Report};
use cayley_realize::herglotz::{eval_herglotz, HerglotzRealization};
use cayley_realize::numerics::CMatrix;
use cayley_realize::pipeline::{self, SynthesisOptions, Target};
use cayley_realize::realization::{eval_transfer, GivoneRoesserRealization};
use cayley_realize::verify::{gen_instance, InstanceDims, InstanceKind};
use cayley_realize::{Error, Tolerances};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(
    cayley_realize,
    CayleyError,
    PyValueError,
    "Numerical or validation failure."
);
create_exception!(
    cayley_realize,
    SingularEvaluationError,
    CayleyError,
    "Evaluation hit a singular point."
);
create_exception!(
    cayley_realize,
    StageFailureError,
    CayleyError,
    "A synthesis stage failed."
);

type PyMatrix = Vec<Vec<Complex64>>;

fn err(e: Error) -> PyErr {
    if e.is_singular_evaluation() {
        SingularEvaluationError::new_err(e.to_string())
    } else {
        CayleyError::new_err(format!("{}: {e}", e.kind()))
    }
}

fn to_py(m: &CMatrix) -> PyMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_py(rows: &PyMatrix) -> PyResult<CMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CayleyError::new_err("matrix rows have unequal lengths"));
    }
    Ok(CMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn tolerances(atol: Option<f64>) -> PyResult<Tolerances> {
    let d = Tolerances::default();
    Tolerances::new(atol.unwrap_or(d.identity_atol), d.rank_rtol, d.psd_atol).map_err(err)
}

fn verify_any(
    art: Artifact,
    checks: Option<Vec<String>>,
    seed: u64,
    samples: Option<usize>,
    atol: Option<f64>,
) -> PyResult<PyReport> {
    let tol = tolerances(atol)?;
    let report = cli::verify_artifact(&art, checks.as_deref(), seed, samples, &tol).map_err(err)?;
    Ok(PyReport(report))
}

#[pyclass(name = "Pencil", module = "cayley_realize", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPencil(LongResolventPencil);

#[pymethods]
impl PyPencil {
    /// `coefficients` holds `A_0, ..., A_d`, each of size `n + m`.
    #[new]
    #[pyo3(signature = (n, m, coefficients, tag = "nonhomogeneous", atol = None))]
    fn new(n: usize, m: usize, coefficients: Vec<PyMatrix>, tag: &str, atol: Option<f64>) -> PyResult<Self> {
        let class = match tag {
            "nonhomogeneous" => PencilClass::Nonhomogeneous,
            "homogeneous" => PencilClass::Homogeneous,
            "real_homogeneous" => PencilClass::RealHomogeneous,
            other => return Err(CayleyError::new_err(format!("unknown pencil tag {other:?}"))),
        };
        let coeffs = coefficients.iter().map(from_py).collect::<PyResult<Vec<_>>>()?;
        LongResolventPencil::new(n, m, coeffs, class, &tolerances(atol)?)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn coefficients(&self) -> Vec<PyMatrix> {
        self.0.coeffs().iter().map(to_py).collect()
    }

    fn __call__(&self, z: Vec<Complex64>) -> PyResult<PyMatrix> {
        if z.len() != self.0.d() {
            return Err(CayleyError::new_err(format!("expected {} coordinates", self.0.d())));
        }
        eval_pencil(&self.0, &z).map(|v| to_py(&v)).map_err(err)
    }

    #[pyo3(signature = (target = "pencil_roundtrip", seed = 0, hermitian = None, real = None, samples = 100, literal_sqrt = false, atol = None))]
    #[allow(clippy::too_many_arguments)]
    fn synthesize(
        &self,
        target: &str,
        seed: u64,
        hermitian: Option<bool>,
        real: Option<bool>,
        samples: usize,
        literal_sqrt: bool,
        atol: Option<f64>,
    ) -> PyResult<PySynthesis> {
        let target: Target = target.parse().map_err(err)?;
        let opts = SynthesisOptions {
            hermitian,
            real,
            seed,
            samples,
            literal_sqrt,
        };
        pipeline::synthesize(&self.0, target, &opts, &tolerances(atol)?)
            .map(PySynthesis)
            .map_err(|f| StageFailureError::new_err(f.to_string()))
    }

    #[pyo3(signature = (checks = None, seed = 0, samples = None, atol = None))]
    fn verify(
        &self,
        checks: Option<Vec<String>>,
        seed: u64,
        samples: Option<usize>,
        atol: Option<f64>,
    ) -> PyResult<PyReport> {
        verify_any(Artifact::Pencil(self.0.clone()), checks, seed, samples, atol)
    }

    fn to_json(&self) -> String {
        Artifact::Pencil(self.0.clone()).to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "Pencil(d={}, n={}, m={}, tag={:?})",
            self.0.d(),
            self.0.n(),
            self.0.m(),
            self.0.class()
        )
    }
}

#[pyclass(name = "GrRealization", module = "cayley_realize", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGr(GivoneRoesserRealization);

#[pymethods]
impl PyGr {
    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn state_dims(&self) -> Vec<usize> {
        self.0.state_dims().to_vec()
    }

    #[getter]
    fn u(&self) -> PyMatrix {
        to_py(self.0.u())
    }

    #[getter]
    fn unitarity_residual(&self) -> f64 {
        self.0.unitarity_residual()
    }

    #[getter]
    fn hermitian(&self) -> bool {
        self.0.flags().hermitian
    }

    #[getter]
    fn real(&self) -> bool {
        self.0.flags().real
    }

    fn __call__(&self, zeta: Vec<Complex64>) -> PyResult<PyMatrix> {
        if zeta.len() != self.0.d() {
            return Err(CayleyError::new_err(format!("expected {} coordinates", self.0.d())));
        }
        eval_transfer(&self.0, &zeta).map(|v| to_py(&v)).map_err(err)
    }

    #[pyo3(signature = (checks = None, seed = 0, samples = None, atol = None))]
    fn verify(
        &self,
        checks: Option<Vec<String>>,
        seed: u64,
        samples: Option<usize>,
        atol: Option<f64>,
    ) -> PyResult<PyReport> {
        verify_any(Artifact::GrRealization(self.0.clone()), checks, seed, samples, atol)
    }

    fn to_json(&self) -> String {
        Artifact::GrRealization(self.0.clone()).to_json()
    }

    fn __repr__(&self) -> String {
        format!("GrRealization(n={}, state_dims={:?})", self.0.n(), self.0.state_dims())
    }
}

#[pyclass(name = "HerglotzRealization", module = "cayley_realize", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHerglotz(HerglotzRealization);

#[pymethods]
impl PyHerglotz {
    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn state_dims(&self) -> Vec<usize> {
        self.0.state_dims().to_vec()
    }

    #[getter]
    fn beta(&self) -> PyMatrix {
        to_py(self.0.beta())
    }

    #[getter]
    fn w(&self) -> PyMatrix {
        to_py(self.0.w())
    }

    #[getter]
    fn v(&self) -> PyMatrix {
        to_py(self.0.v())
    }

    fn __call__(&self, zeta: Vec<Complex64>) -> PyResult<PyMatrix> {
        if zeta.len() != self.0.d() {
            return Err(CayleyError::new_err(format!("expected {} coordinates", self.0.d())));
        }
        eval_herglotz(&self.0, &zeta).map(|v| to_py(&v)).map_err(err)
    }

    #[pyo3(signature = (checks = None, seed = 0, samples = None, atol = None))]
    fn verify(
        &self,
        checks: Option<Vec<String>>,
        seed: u64,
        samples: Option<usize>,
        atol: Option<f64>,
    ) -> PyResult<PyReport> {
        verify_any(
            Artifact::HerglotzRealization(self.0.clone()),
            checks,
            seed,
            samples,
            atol,
        )
    }

    fn to_json(&self) -> String {
        Artifact::HerglotzRealization(self.0.clone()).to_json()
    }
}

#[pyclass(name = "Tuple", module = "cayley_realize", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTuple(TupleOfMatrices);

#[pymethods]
impl PyTuple {
    #[new]
    #[pyo3(signature = (matrices, commutation_tol = 1e-12))]
    fn new(matrices: Vec<PyMatrix>, commutation_tol: f64) -> PyResult<Self> {
        let mats = matrices.iter().map(from_py).collect::<PyResult<Vec<_>>>()?;
        TupleOfMatrices::new(mats, commutation_tol).map(Self).map_err(err)
    }

    #[getter]
    fn matrices(&self) -> Vec<PyMatrix> {
        self.0.matrices().iter().map(to_py).collect()
    }

    fn to_json(&self) -> String {
        Artifact::Tuple(self.0.clone()).to_json()
    }
}

#[pyclass(name = "Report", module = "cayley_realize", frozen)]
struct PyReport(Report);

#[pymethods]
impl PyReport {
    #[getter]
    fn passed(&self) -> bool {
        self.0.passed()
    }

    /// `(stage, check, max_residual, threshold, verdict)` rows.
    fn rows(&self) -> Vec<(String, String, f64, f64, bool)> {
        self.0
            .stages
            .iter()
            .flat_map(|s| {
                s.reports
                    .iter()
                    .map(|r| (s.stage.clone(), r.name.clone(), r.max_residual, r.threshold, r.verdict))
            })
            .collect()
    }

    fn summary(&self) -> String {
        self.0.summary()
    }

    fn to_json(&self) -> String {
        Artifact::Report(self.0.clone()).to_json()
    }
}

#[pyclass(name = "Synthesis", module = "cayley_realize", frozen)]
struct PySynthesis(pipeline::Synthesis);

#[pymethods]
impl PySynthesis {
    #[getter]
    fn passed(&self) -> bool {
        self.0.passed()
    }

    #[getter]
    fn factors(&self) -> Vec<PyMatrix> {
        self.0.decomposition.factors.iter().map(to_py).collect()
    }

    #[getter]
    fn gr(&self) -> Option<PyGr> {
        self.0.gr.clone().map(PyGr)
    }

    #[getter]
    fn herglotz(&self) -> Option<PyHerglotz> {
        self.0.herglotz.clone().map(PyHerglotz)
    }

    #[getter]
    fn pencil(&self) -> Option<PyPencil> {
        self.0.pencil.clone().map(PyPencil)
    }

    fn report(&self) -> PyReport {
        PyReport(Report {
            command: format!("synthesize {}", self.0.target),
            stages: self.0.stages.clone(),
            failure: None,
        })
    }

    /// `f(R)` for a commuting strictly accretive tuple.
    #[pyo3(signature = (tuple, atol = None))]
    fn eval_on_tuple(&self, tuple: &PyTuple, atol: Option<f64>) -> PyResult<PyMatrix> {
        self.0
            .eval_on_tuple(&tuple.0, &tolerances(atol)?)
            .map(|v| to_py(&v))
            .map_err(err)
    }
}

fn wrap(py: Python<'_>, art: Artifact) -> PyResult<Py<PyAny>> {
    Ok(match art {
        Artifact::Pencil(p) => Py::new(py, PyPencil(p))?.into_any(),
        Artifact::GrRealization(g) => Py::new(py, PyGr(g))?.into_any(),
        Artifact::HerglotzRealization(h) => Py::new(py, PyHerglotz(h))?.into_any(),
        Artifact::Tuple(t) => Py::new(py, PyTuple(t))?.into_any(),
        Artifact::Report(r) => Py::new(py, PyReport(r))?.into_any(),
        other => {
            return Err(CayleyError::new_err(format!(
                "{} artifacts have no Python type",
                other.kind()
            )))
        }
    })
}

/// Parses an artifact file's text.
#[pyfunction]
#[pyo3(signature = (text, atol = None))]
fn loads(py: Python<'_>, text: &str, atol: Option<f64>) -> PyResult<Py<PyAny>> {
    wrap(py, Artifact::from_json(text, &tolerances(atol)?).map_err(err)?)
}

/// Seeded instance of `kind` (pencil_nonhomogeneous, gr_unitary, ...).
#[pyfunction]
#[pyo3(signature = (kind, seed = 0, d = 2, n = 1, m = 1, s = 2))]
fn generate(py: Python<'_>, kind: &str, seed: u64, d: usize, n: usize, m: usize, s: usize) -> PyResult<Py<PyAny>> {
    let kind: InstanceKind = kind.parse().map_err(err)?;
    let inst = gen_instance(kind, seed, InstanceDims { d, n, m, s }, &Tolerances::default()).map_err(err)?;
    wrap(py, inst.into())
}

/// Runs the command line in-process and returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let (mut out, mut errs) = (Vec::new(), Vec::new());
    let argv = std::iter::once("cayley-realize".to_string()).chain(args);
    let code = cli::run(argv, &mut out, &mut errs);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&errs).into_owned(),
    )
}

#[pymodule]
#[pyo3(name = "cayley_realize")]
fn cayley_realize_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("FORMAT_VERSION", cli::FORMAT_VERSION)?;
    m.add("CayleyError", m.py().get_type::<CayleyError>())?;
    m.add("SingularEvaluationError", m.py().get_type::<SingularEvaluationError>())?;
    m.add("StageFailureError", m.py().get_type::<StageFailureError>())?;
    m.add_class::<PyPencil>()?;
    m.add_class::<PyGr>()?;
    m.add_class::<PyHerglotz>()?;
    m.add_class::<PyTuple>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PySynthesis>()?;
    m.add_function(wrap_pyfunction!(loads, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
