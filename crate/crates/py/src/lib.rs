//! Python bindings: meshes, nonlinearities, problems, the eigensolver, the
//! half-space model and the preset pipeline.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use wentzell::cli::{certify, run_check, run_solve};
use wentzell::config::{preset, preset_names, RunConfig};
use wentzell::geometry::{x2_inner_product, BoundaryPoint};
use wentzell::halfspace::{boundary_symbol, estimate_constants, solve_frequency, FrequencyProblem};
use wentzell::nonlinearity::{delta2_check, young_gap};
use wentzell::operator::weak_residual;
use wentzell::solvability::necessity_audit_report;
use wentzell::solver::{energy, gradient, solve, Gauge, SolveOptions, SolveStatus};
use wentzell::spectral::{null_space_dim, smallest_eigenpair};
use wentzell::{assemble, Error, Mesh, Nonlinearity, ProductVector, WentzellProblem};

fn to_py(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::DivergedAlongNullspace => "diverged-along-nullspace",
        SolveStatus::MaxIter => "max-iter",
    }
}

/// Evaluates a boundary coefficient given as a number or as `f(x, y, s)`.
fn sample_boundary(coeff: &Bound<'_, PyAny>, points: &[BoundaryPoint]) -> PyResult<Vec<f64>> {
    if let Ok(v) = coeff.extract::<f64>() {
        return Ok(vec![v; points.len()]);
    }
    if coeff.is_callable() {
        return points
            .iter()
            .map(|p| coeff.call1((p.x, p.y, p.s))?.extract::<f64>())
            .collect();
    }
    coeff.extract::<Vec<f64>>()
}

#[pyclass(name = "Mesh", module = "wentzell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: Mesh,
}

impl PyMesh {
    fn with_coefficients(bare: Mesh, b: &Bound<'_, PyAny>, c: &Bound<'_, PyAny>) -> PyResult<Self> {
        let points = bare.boundary_points();
        let bv = sample_boundary(b, &points)?;
        let cv = sample_boundary(c, &points)?;
        if bv.len() != points.len() || cv.len() != points.len() {
            return Err(PyValueError::new_err(format!(
                "boundary coefficients need {} values",
                points.len()
            )));
        }
        let index = |p: BoundaryPoint| points.iter().position(|o| *o == p).expect("point from this mesh");
        let inner = bare
            .with_coefficients(&|p| bv[index(p)], &|p| cv[index(p)])
            .map_err(to_py)?;
        Ok(Self { inner })
    }
}

#[pymethods]
impl PyMesh {
    /// Uniform grid on `[a, b]`; `b_coeff` and `c_coeff` are numbers,
    /// per-endpoint lists or callables `f(x, y, s)`.
    #[staticmethod]
    #[pyo3(signature = (a, b, n, b_coeff = None, c_coeff = None))]
    fn interval(
        py: Python<'_>,
        a: f64,
        b: f64,
        n: usize,
        b_coeff: Option<Bound<'_, PyAny>>,
        c_coeff: Option<Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let one = |_: BoundaryPoint| 1.0;
        let bare = wentzell::build_interval_mesh(a, b, n, &one, &one).map_err(to_py)?;
        let b_coeff = b_coeff.unwrap_or_else(|| 1.0f64.into_pyobject(py).unwrap().into_any());
        let c_coeff = c_coeff.unwrap_or_else(|| 0.0f64.into_pyobject(py).unwrap().into_any());
        Self::with_coefficients(bare, &b_coeff, &c_coeff)
    }

    /// Tensor grid on `[0, lx] × [0, ly]`.
    #[staticmethod]
    #[pyo3(signature = (lx, ly, nx, ny, b_coeff = None, c_coeff = None))]
    fn rectangle(
        py: Python<'_>,
        lx: f64,
        ly: f64,
        nx: usize,
        ny: usize,
        b_coeff: Option<Bound<'_, PyAny>>,
        c_coeff: Option<Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let one = |_: BoundaryPoint| 1.0;
        let bare = wentzell::build_rectangle_mesh(lx, ly, nx, ny, &one, &one).map_err(to_py)?;
        let b_coeff = b_coeff.unwrap_or_else(|| 1.0f64.into_pyobject(py).unwrap().into_any());
        let c_coeff = c_coeff.unwrap_or_else(|| 0.0f64.into_pyobject(py).unwrap().into_any());
        Self::with_coefficients(bare, &b_coeff, &c_coeff)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_boundary(&self) -> usize {
        self.inner.num_boundary()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn coords(&self) -> Vec<(f64, f64)> {
        self.inner.coords().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn boundary_nodes(&self) -> Vec<usize> {
        self.inner.boundary_nodes().to_vec()
    }

    /// `(x, y, s)` for every boundary node.
    fn boundary_points(&self) -> Vec<(f64, f64, f64)> {
        self.inner.boundary_points().iter().map(|p| (p.x, p.y, p.s)).collect()
    }

    /// `(λ₁, λ₂)`: the measures of the domain and of the boundary in `dS/b`.
    fn measure(&self) -> (f64, f64) {
        let m = self.inner.measure();
        (m.interior, m.boundary)
    }

    /// `𝕏₂` inner product of two trace-coupled nodal vectors.
    fn inner_product(&self, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        let u = ProductVector::from_nodal(&self.inner, u).map_err(to_py)?;
        let v = ProductVector::from_nodal(&self.inner, v).map_err(to_py)?;
        x2_inner_product(&u, &v, &self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh({:?}, nodes={}, boundary={})",
            self.inner.dimension(),
            self.inner.num_nodes(),
            self.inner.num_boundary()
        )
    }
}

#[pyclass(name = "Nonlinearity", module = "wentzell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyNonlinearity {
    inner: Nonlinearity,
}

#[pymethods]
impl PyNonlinearity {
    #[staticmethod]
    fn zero() -> Self {
        Self {
            inner: Nonlinearity::zero(),
        }
    }

    #[staticmethod]
    fn arctan() -> Self {
        Self {
            inner: Nonlinearity::arctan(),
        }
    }

    /// `α(s) = r |s|^{p-1} s`.
    #[staticmethod]
    fn power(r: f64, p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Nonlinearity::power(r, p).map_err(to_py)?,
        })
    }

    /// Piecewise-linear interpolation of `(s, α(s))` points, constant
    /// outside.
    #[staticmethod]
    fn table(points: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self {
            inner: Nonlinearity::table(points).map_err(to_py)?,
        })
    }

    /// A Python callable `α(s)`; `primitive(t)` is optional and replaces
    /// numerical quadrature. Exceptions inside the callables yield NaN.
    #[staticmethod]
    #[pyo3(signature = (name, alpha, primitive = None))]
    fn custom(name: String, alpha: Py<PyAny>, primitive: Option<Py<PyAny>>) -> PyResult<Self> {
        let call = |f: Py<PyAny>| {
            move |s: f64| Python::attach(|py| f.call1(py, (s,)).and_then(|v| v.extract::<f64>(py)).unwrap_or(f64::NAN))
        };
        let inner = match primitive {
            Some(p) => Nonlinearity::custom_with_primitive(name, call(alpha), call(p)),
            None => Nonlinearity::custom(name, call(alpha)),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    #[getter]
    fn is_smooth(&self) -> bool {
        self.inner.is_smooth()
    }

    fn eval(&self, s: f64) -> f64 {
        self.inner.eval(s)
    }

    fn __call__(&self, s: f64) -> f64 {
        self.inner.eval(s)
    }

    fn derivative(&self, s: f64) -> Option<f64> {
        self.inner.derivative(s)
    }

    fn primitive(&self, t: f64) -> f64 {
        self.inner.primitive(t)
    }

    fn young(&self, t: f64) -> f64 {
        self.inner.young(t)
    }

    fn conjugate_young(&self, s: f64) -> f64 {
        self.inner.conjugate_young(s)
    }

    fn young_gap(&self, s: f64, t: f64) -> f64 {
        young_gap(&self.inner, s, t)
    }

    /// `(lower, upper, lower_attained, upper_attained)`.
    fn range(&self) -> (f64, f64, bool, bool) {
        let r = self.inner.range();
        (r.lower, r.upper, r.lower_attained, r.upper_attained)
    }

    #[pyo3(signature = (t_max = 1e6, samples = 120))]
    fn delta2<'py>(&self, py: Python<'py>, t_max: f64, samples: usize) -> PyResult<Bound<'py, PyDict>> {
        let rep = delta2_check(&self.inner, t_max, samples).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("passes", rep.passes)?;
        d.set_item("empirical_c", rep.empirical_c)?;
        d.set_item("witness", rep.witness)?;
        d.set_item("analytic", rep.analytic)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Nonlinearity({})", self.inner.name())
    }
}

/// Interior values from a number, a list or a callable `f(x, y)`.
fn sample_interior(mesh: &Mesh, data: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
    if let Ok(v) = data.extract::<f64>() {
        return Ok(vec![v; mesh.num_nodes()]);
    }
    if data.is_callable() {
        return mesh
            .coords()
            .iter()
            .map(|p| data.call1((p[0], p[1]))?.extract::<f64>())
            .collect();
    }
    data.extract::<Vec<f64>>()
}

fn parse_gauge(name: &str) -> PyResult<Gauge> {
    match name {
        "zero-mean" => Ok(Gauge::ZeroMean),
        "pin-first-node" => Ok(Gauge::PinFirstNode),
        "none" => Ok(Gauge::None),
        other => Err(PyValueError::new_err(format!(
            "unknown gauge `{other}` (zero-mean, pin-first-node, none)"
        ))),
    }
}

#[pyclass(name = "Problem", module = "wentzell", frozen, skip_from_py_object)]
struct PyProblem {
    inner: WentzellProblem,
}

impl PyProblem {
    fn coupled(&self, u: Vec<f64>) -> PyResult<ProductVector> {
        ProductVector::from_nodal(&self.inner.mesh, u).map_err(to_py)
    }
}

#[pymethods]
impl PyProblem {
    /// `f` is a number, a list of nodal values or `f(x, y)`; `g` is a
    /// number, a list of boundary values or `g(x, y, s)`.
    #[new]
    #[pyo3(signature = (mesh, alpha1, alpha2, f, g, q = 0.0, shift = 0.0))]
    fn new(
        mesh: &PyMesh,
        alpha1: &PyNonlinearity,
        alpha2: &PyNonlinearity,
        f: &Bound<'_, PyAny>,
        g: &Bound<'_, PyAny>,
        q: f64,
        shift: f64,
    ) -> PyResult<Self> {
        let mesh = mesh.inner.clone();
        let interior = sample_interior(&mesh, f)?;
        let boundary = sample_boundary(g, &mesh.boundary_points())?;
        let load = ProductVector::new(interior, boundary);
        let inner = WentzellProblem::new(mesh, q, alpha1.inner.clone(), alpha2.inner.clone(), load)
            .map_err(to_py)?
            .with_shift(shift);
        Ok(Self { inner })
    }

    #[getter]
    fn total_load(&self) -> f64 {
        self.inner.total_load()
    }

    #[getter]
    fn shift(&self) -> f64 {
        self.inner.shift
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    /// Solvability certificate as a dict.
    fn certify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let rep = certify(&self.inner, None).map_err(to_py)?;
        json_to_py(py, &rep.to_json())
    }

    /// Minimizes the energy; returns status, nodal `u`, residual and traces.
    #[pyo3(signature = (tol = 1e-9, max_iter = 200, gauge = "zero-mean", initial = None))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        tol: f64,
        max_iter: usize,
        gauge: &str,
        initial: Option<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let opts = SolveOptions {
            tol,
            max_iter,
            gauge: parse_gauge(gauge)?,
            initial,
            ..SolveOptions::default()
        };
        let ops = self.inner.assemble().map_err(to_py)?;
        let out = py.detach(|| solve(&self.inner, &ops, &opts)).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("status", status_name(out.status))?;
        d.set_item("method", format!("{:?}", out.method).to_lowercase())?;
        d.set_item("u", out.u.interior().to_vec())?;
        d.set_item("residual", out.residual)?;
        d.set_item("iterations", out.iterations)?;
        d.set_item("energy_trace", out.energy_trace)?;
        d.set_item("mean_trace", out.mean_trace)?;
        d.set_item("drift_rate", out.drift_rate)?;
        Ok(d)
    }

    fn energy(&self, u: Vec<f64>) -> PyResult<f64> {
        let ops = self.inner.assemble().map_err(to_py)?;
        energy(&self.inner, &ops, &self.coupled(u)?).map_err(to_py)
    }

    /// Nodal values of the `𝕏₂` gradient.
    fn gradient(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        let ops = self.inner.assemble().map_err(to_py)?;
        Ok(gradient(&self.inner, &ops, &self.coupled(u)?)
            .map_err(to_py)?
            .interior()
            .to_vec())
    }

    fn weak_residual(&self, u: Vec<f64>) -> PyResult<f64> {
        let ops = self.inner.assemble().map_err(to_py)?;
        weak_residual(&self.inner, &ops, &self.coupled(u)?).map_err(to_py)
    }

    /// Integral identity against the constant test function.
    fn audit<'py>(&self, py: Python<'py>, u: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let a = necessity_audit_report(&self.inner, &self.coupled(u)?).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("lhs", a.lhs)?;
        d.set_item("total_load", a.total_load)?;
        d.set_item("identity_holds", a.identity_holds)?;
        d.set_item("in_closure", a.in_closure)?;
        d.set_item("passes", a.passes)?;
        Ok(d)
    }
}

/// Smallest eigenpair of the linear operator on `mesh`.
#[pyfunction]
#[pyo3(signature = (mesh, q = 0.0))]
fn eigen<'py>(py: Python<'py>, mesh: &PyMesh, q: f64) -> PyResult<Bound<'py, PyDict>> {
    let ops = assemble(&mesh.inner, q).map_err(to_py)?;
    let eig = py.detach(|| smallest_eigenpair(&ops)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("eigenvalue", eig.eigenvalue)?;
    d.set_item("next_eigenvalue", eig.next_eigenvalue)?;
    d.set_item("vector", eig.vector.interior().to_vec())?;
    d.set_item("residual", eig.residual)?;
    d.set_item("iterations", eig.iterations)?;
    d.set_item("method", format!("{:?}", eig.method).to_lowercase())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(name = "null_space_dim", signature = (mesh, q = 0.0, tol = 1e-8))]
fn py_null_space_dim(mesh: &PyMesh, q: f64, tol: f64) -> PyResult<usize> {
    let ops = assemble(&mesh.inner, q).map_err(to_py)?;
    null_space_dim(&ops, tol).map_err(to_py)
}

/// Decaying solution of one half-space frequency problem.
#[pyfunction]
#[pyo3(signature = (zeta, lam, b = 1.0, c = 0.0, q = 0.0, g_hat = 1.0))]
fn halfspace<'py>(
    py: Python<'py>,
    zeta: f64,
    lam: f64,
    b: f64,
    c: f64,
    q: f64,
    g_hat: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let fp = FrequencyProblem::new(zeta, lam, b, c, q)
        .map_err(to_py)?
        .with_boundary_data(g_hat);
    let sol = solve_frequency(&fp).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("symbol", boundary_symbol(&fp))?;
    d.set_item("z", sol.z)?;
    d.set_item("u", sol.u)?;
    d.set_item("boundary_residual", sol.boundary_residual)?;
    Ok(d)
}

/// Extreme data-to-solution norm ratios over a frequency sweep.
#[pyfunction]
#[pyo3(signature = (zetas, lam, b = 1.0, c = 0.0, q = 0.0, g_hat = 1.0))]
fn halfspace_constants(zetas: Vec<f64>, lam: f64, b: f64, c: f64, q: f64, g_hat: f64) -> PyResult<(f64, f64)> {
    let sweep = zetas
        .iter()
        .map(|&z| FrequencyProblem::new(z, lam, b, c, q).map(|fp| fp.with_boundary_data(g_hat)))
        .collect::<wentzell::Result<Vec<_>>>()
        .map_err(to_py)?;
    let est = estimate_constants(&sweep).map_err(to_py)?;
    Ok((est.c_low, est.c_high))
}

#[pyfunction]
#[pyo3(name = "preset_names")]
fn py_preset_names() -> Vec<&'static str> {
    preset_names()
}

fn load_config(name: Option<&str>, config: Option<&str>) -> PyResult<RunConfig> {
    match (name, config) {
        (Some(n), None) => preset(n).map_err(to_py),
        (None, Some(text)) => RunConfig::from_json(text).map_err(to_py),
        _ => Err(PyValueError::new_err("pass exactly one of preset= or config=")),
    }
}

/// Certificate for a preset name or a JSON config string.
#[pyfunction]
#[pyo3(signature = (preset = None, config = None, load_scale = None))]
fn check<'py>(
    py: Python<'py>,
    preset: Option<&str>,
    config: Option<&str>,
    load_scale: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = load_config(preset, config)?;
    if let Some(s) = load_scale {
        cfg.load_scale = s;
    }
    let rep = py.detach(|| run_check(&cfg)).map_err(to_py)?;
    json_to_py(py, &rep.to_json())
}

/// Certify, solve and audit; the dict mirrors the CLI report plus `u`.
#[pyfunction]
#[pyo3(signature = (preset = None, config = None, load_scale = None, force = false))]
fn run<'py>(
    py: Python<'py>,
    preset: Option<&str>,
    config: Option<&str>,
    load_scale: Option<f64>,
    force: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = load_config(preset, config)?;
    if let Some(s) = load_scale {
        cfg.load_scale = s;
    }
    let out = py.detach(|| run_solve(&cfg, force)).map_err(to_py)?;
    let report = json_to_py(py, &out.to_json())?;
    let u = out
        .outcome
        .as_ref()
        .map(|o| PyList::new(py, o.u.interior()))
        .transpose()?;
    report.set_item("u", u)?;
    report.set_item("exit_code", out.exit_code())?;
    Ok(report)
}

#[pymodule]
#[pyo3(name = "wentzell")]
pub fn wentzell_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyNonlinearity>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(eigen, m)?)?;
    m.add_function(wrap_pyfunction!(py_null_space_dim, m)?)?;
    m.add_function(wrap_pyfunction!(halfspace, m)?)?;
    m.add_function(wrap_pyfunction!(halfspace_constants, m)?)?;
    m.add_function(wrap_pyfunction!(py_preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
