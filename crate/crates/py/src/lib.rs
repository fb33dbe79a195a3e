//! Python bindings: models, weights and the experiment entry points.
//! Matrices cross the boundary as lists of rows of complex numbers.

use dbgibbs::bounds::{double_commutator_identity, local_gap, lr_truncation_check};
use dbgibbs::dirichlet::metropolis_kernel_identity;
use dbgibbs::linalg::gibbs::gibbs;
use dbgibbs::linalg::ops::embed;
use dbgibbs::linalg::{hermitian_eig, Backend};
use dbgibbs::lindblad::{assemble, Weight};
use dbgibbs::markov::{cmi_decay_scan, qcmi as core_qcmi, von_neumann_entropy as core_entropy, Tripartition};
use dbgibbs::recovery::{patching_prepare, recovery_error_curve, truncation_scan as core_truncation_scan, PatchingOptions, RecoveryScenario};
use dbgibbs::spinsys::{
    build_ising_chain, build_random_local, build_tfim_chain_split, pauli_string, single_site_jumps, Hamiltonian, Pauli,
    Region,
};
use dbgibbs::{c64, Error, Mat};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    match e {
        Error::Capacity { .. } | Error::Stiffness { .. } | Error::QuadratureNonConvergence(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows_of(m: &Mat<c64>) -> Vec<Vec<c64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

fn mat_of(rows: &[Vec<c64>]) -> PyResult<Mat<c64>> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("expected a square matrix"));
    }
    Ok(Mat::from_fn(d, d, |r, c| rows[r][c]))
}

fn backend(name: &str) -> PyResult<Backend> {
    match name {
        "spectral" => Ok(Backend::Spectral),
        "ode" => Ok(Backend::Ode),
        _ => Err(PyValueError::new_err(format!("unknown backend {name:?}; use \"spectral\" or \"ode\""))),
    }
}

#[pyclass(name = "Hamiltonian", module = "dbgibbs", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHamiltonian {
    inner: Hamiltonian,
}

#[pymethods]
impl PyHamiltonian {
    /// Σ J Z_i Z_{i+1} + Σ g X_i; fields with |g| > 1 are split into unit-norm pieces.
    #[staticmethod]
    #[pyo3(signature = (n, j, g, periodic = false))]
    fn tfim(n: usize, j: f64, g: f64, periodic: bool) -> PyResult<Self> {
        Ok(PyHamiltonian { inner: build_tfim_chain_split(n, j, g, periodic).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, j, periodic = false))]
    fn ising(n: usize, j: f64, periodic: bool) -> PyResult<Self> {
        Ok(PyHamiltonian { inner: build_ising_chain(n, j, periodic).map_err(err)? })
    }

    #[staticmethod]
    fn random_local(n: usize, k: usize, m: usize, seed: u64) -> PyResult<Self> {
        Ok(PyHamiltonian { inner: build_random_local(n, k, m, seed).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyHamiltonian { inner: Hamiltonian::from_json(s).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn num_terms(&self) -> usize {
        self.inner.terms().len()
    }

    fn dense(&self) -> Vec<Vec<c64>> {
        rows_of(&self.inner.dense())
    }

    fn __repr__(&self) -> String {
        format!("Hamiltonian(n={}, terms={}, degree={})", self.inner.n(), self.inner.terms().len(), self.inner.degree())
    }
}

#[pyclass(name = "Weight", module = "dbgibbs", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWeight {
    inner: Weight,
}

#[pymethods]
impl PyWeight {
    /// sigma defaults to 1/beta
    #[staticmethod]
    #[pyo3(signature = (beta, sigma = None))]
    fn metropolis(beta: f64, sigma: Option<f64>) -> PyResult<Self> {
        Ok(PyWeight { inner: Weight::metropolis(beta, sigma.unwrap_or(1.0 / beta)).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (beta, omega_gamma, sigma = None))]
    fn gaussian(beta: f64, omega_gamma: f64, sigma: Option<f64>) -> PyResult<Self> {
        Ok(PyWeight { inner: Weight::gaussian(beta, sigma.unwrap_or(1.0 / beta), omega_gamma).map_err(err)? })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    fn gamma(&self, omega: f64) -> f64 {
        self.inner.gamma(omega)
    }

    fn alpha(&self, nu1: f64, nu2: f64) -> f64 {
        self.inner.alpha(nu1, nu2)
    }

    fn h(&self, nu1: f64, nu2: f64) -> f64 {
        self.inner.h(nu1, nu2)
    }

    fn __repr__(&self) -> String {
        format!("Weight({:?}, beta={}, sigma={})", self.inner.kind, self.inner.beta, self.inner.sigma)
    }
}

#[pyfunction]
fn gibbs_state(h: &PyHamiltonian, beta: f64) -> PyResult<Vec<Vec<c64>>> {
    let spec = hermitian_eig(&h.inner.dense()).map_err(err)?;
    Ok(rows_of(&gibbs(&spec, beta).map_err(err)?.rho))
}

/// Detailed-balance residual, ‖L[ρ_β]‖₁ and spectral gap for jumps on `region`.
#[pyfunction]
fn generator_checks<'py>(py: Python<'py>, h: &PyHamiltonian, weight: &PyWeight, region: Vec<usize>) -> PyResult<Bound<'py, PyDict>> {
    let spec = hermitian_eig(&h.inner.dense()).map_err(err)?;
    let gs = gibbs(&spec, weight.inner.beta).map_err(err)?;
    let g = assemble(&spec, &single_site_jumps(&Region::new(region)).map_err(err)?, &weight.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("detailed_balance", g.detailed_balance_residual(&gs).map_err(err)?)?;
    d.set_item("fixed_point", g.fixed_point_defect(&gs).map_err(err)?)?;
    d.set_item("gap", local_gap(&g).map_err(err)?)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (h, weight, region, times, ell = None, backend = "spectral", seed = 0))]
#[allow(clippy::too_many_arguments)]
fn recovery_curve<'py>(
    py: Python<'py>,
    h: &PyHamiltonian,
    weight: &PyWeight,
    region: Vec<usize>,
    times: Vec<f64>,
    ell: Option<usize>,
    backend: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut s = RecoveryScenario::new(h.inner.clone(), weight.inner.clone(), Region::new(region), times)
        .map_err(err)?
        .with_backend(self::backend(backend)?)
        .with_seed(seed);
    if let Some(l) = ell {
        s = s.with_ell(l).map_err(err)?;
    }
    let c = py.detach(|| recovery_error_curve(&s)).map_err(err)?;
    let rows = c
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("t", r.t)?;
            d.set_item("ell", r.ell)?;
            d.set_item("err", r.err)?;
            d.set_item("fixed_point_defect", r.fixed_point_defect)?;
            d.set_item("dirichlet", r.dirichlet)?;
            d.set_item("stationarity", r.stationarity)?;
            d.set_item("bound_2_over_t", r.bound_2_over_t)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let out = PyDict::new(py);
    out.set_item("rows", rows)?;
    out.set_item("fitted_exponent", c.fitted_exponent)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (h, weight, region, times, ells, backend = "spectral"))]
fn truncation_scan<'py>(
    py: Python<'py>,
    h: &PyHamiltonian,
    weight: &PyWeight,
    region: Vec<usize>,
    times: Vec<f64>,
    ells: Vec<usize>,
    backend: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let b = self::backend(backend)?;
    let a = Region::new(region);
    let rows = py.detach(|| core_truncation_scan(&h.inner, &weight.inner, &a, &times, &ells, b)).map_err(err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("t", r.t)?;
            d.set_item("ell", r.ell)?;
            d.set_item("err_full", r.err_full)?;
            d.set_item("err_trunc", r.err_trunc)?;
            d.set_item("map_gap", r.map_gap)?;
            d.set_item("support", r.support)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (h, weight, patch_size, ell, t, rounds = 1, buffer = 0, backend = "spectral"))]
#[allow(clippy::too_many_arguments)]
fn patching<'py>(
    py: Python<'py>,
    h: &PyHamiltonian,
    weight: &PyWeight,
    patch_size: usize,
    ell: usize,
    t: f64,
    rounds: usize,
    buffer: usize,
    backend: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let mut o = PatchingOptions::new(patch_size, ell, t);
    o.rounds = rounds;
    o.buffer = buffer;
    o.backend = self::backend(backend)?;
    let r = py.detach(|| patching_prepare(&h.inner, &weight.inner, &o)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("err", r.err)?;
    d.set_item("initial_err", r.initial_err)?;
    d.set_item("trace", r.trace)?;
    d.set_item("patches", r.patches.iter().map(|p| p.sites().to_vec()).collect::<Vec<_>>())?;
    Ok(d)
}

#[pyfunction]
fn cmi_scan<'py>(py: Python<'py>, h: &PyHamiltonian, beta: f64, a_size: usize) -> PyResult<Bound<'py, PyDict>> {
    let s = py.detach(|| cmi_decay_scan(&h.inner, beta, a_size)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("dist", s.rows.iter().map(|r| r.dist).collect::<Vec<_>>())?;
    d.set_item("qcmi", s.rows.iter().map(|r| r.qcmi).collect::<Vec<_>>())?;
    d.set_item("slope", s.fit.map(|f| f.slope))?;
    d.set_item("r2", s.fit.map(|f| f.r2))?;
    Ok(d)
}

#[pyfunction]
fn von_neumann_entropy(rho: Vec<Vec<c64>>) -> PyResult<f64> {
    core_entropy(&mat_of(&rho)?).map_err(err)
}

/// I(A:C|B) in nats.
#[pyfunction]
fn qcmi(rho: Vec<Vec<c64>>, a: Vec<usize>, b: Vec<usize>, c: Vec<usize>, n: usize) -> PyResult<f64> {
    let p = Tripartition::new(Region::new(a), Region::new(b), Region::new(c), n).map_err(err)?;
    core_qcmi(&mat_of(&rho)?, &p, n).map_err(err)
}

#[pyfunction]
fn double_commutator_deviation(rho: Vec<Vec<c64>>, region: Vec<usize>, n: usize) -> PyResult<f64> {
    double_commutator_identity(&mat_of(&rho)?, &Region::new(region), n).map_err(err)
}

/// Lieb-Robinson truncation check with A = X on every site of `region`.
#[pyfunction]
fn lieb_robinson<'py>(py: Python<'py>, h: &PyHamiltonian, region: Vec<usize>, ell: usize, times: Vec<f64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let a = Region::new(region);
    if a.max_site().is_some_and(|s| s >= h.inner.n()) {
        return Err(PyValueError::new_err("region site outside the register"));
    }
    let op = embed(&pauli_string(&vec![Pauli::X; a.len()]), a.sites(), h.inner.n());
    let (_, rows) = lr_truncation_check(&h.inner, &a, &op, ell, &times).map_err(err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("t", r.t)?;
            d.set_item("lhs", r.lhs)?;
            d.set_item("bound", r.bound)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn kernel_identity<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let r = metropolis_kernel_identity().map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("h_points", r.h_points)?;
    d.set_item("h_max_rel_err", r.h_max_rel_err)?;
    d.set_item("cosh_points", r.cosh_points)?;
    d.set_item("cosh_max_abs_err", r.cosh_max_abs_err)?;
    d.set_item("pass", r.pass)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "dbgibbs")]
fn dbgibbs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHamiltonian>()?;
    m.add_class::<PyWeight>()?;
    m.add_function(wrap_pyfunction!(gibbs_state, m)?)?;
    m.add_function(wrap_pyfunction!(generator_checks, m)?)?;
    m.add_function(wrap_pyfunction!(recovery_curve, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_scan, m)?)?;
    m.add_function(wrap_pyfunction!(patching, m)?)?;
    m.add_function(wrap_pyfunction!(cmi_scan, m)?)?;
    m.add_function(wrap_pyfunction!(von_neumann_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(qcmi, m)?)?;
    m.add_function(wrap_pyfunction!(double_commutator_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(lieb_robinson, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_identity, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
