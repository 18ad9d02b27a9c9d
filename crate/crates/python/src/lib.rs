//! Python bindings: sieve function evaluation, main terms and sifting limits.

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sifting_limits::dde_oracle::{self, DdeSolution};
use sifting_limits::main_term::{compute_quadratic, MainTermQuadratic, QuadratureRule};
use sifting_limits::optimizer::{self, optimal_a, Optimizer, SiftingResult};
use sifting_limits::{kernel_series, ChainParameters, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::InvalidParameter(_) | Error::Format(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::PrecisionFault { .. } | Error::Tolerance { .. } | Error::Quadrature { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        Error::NoCrossing { .. } => PyRuntimeError::new_err(e.to_string()),
    }
}

fn chain(truncation: usize, circles: usize) -> PyResult<ChainParameters> {
    ChainParameters::new(truncation, circles).map_err(to_py)
}

/// Evaluator for `j` and `j'` of one sieve dimension.
#[pyclass(name = "SieveEvaluator", module = "siftlim", frozen)]
struct PySieveEvaluator {
    inner: sifting_limits::SieveEvaluator,
}

#[pymethods]
impl PySieveEvaluator {
    #[new]
    #[pyo3(signature = (kappa, truncation = ChainParameters::DEFAULT_TRUNCATION, circles = ChainParameters::DEFAULT_NU_MAX))]
    fn new(kappa: u32, truncation: usize, circles: usize) -> PyResult<Self> {
        optimizer::check_kappa(kappa).map_err(to_py)?;
        let inner = sifting_limits::SieveEvaluator::new(kappa, chain(truncation, circles)?)
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn kappa(&self) -> u32 {
        self.inner.kappa()
    }

    /// Largest `u` the evaluator covers.
    #[getter]
    fn coverage(&self) -> f64 {
        self.inner.coverage()
    }

    /// `(value, bound)` of `j(u)`.
    fn j(&self, u: f64) -> PyResult<(f64, f64)> {
        let v = self.inner.eval_j(u).map_err(to_py)?;
        Ok((v.value_f64(), v.bound))
    }

    /// `(value, bound)` of `j'(u)`.
    fn j_prime(&self, u: f64) -> PyResult<(f64, f64)> {
        let v = self.inner.eval_j_prime(u).map_err(to_py)?;
        Ok((v.value_f64(), v.bound))
    }

    /// Bound on the error of `j'` over `(0, u_max]`.
    fn uniform_jp_error(&self, u_max: f64) -> PyResult<f64> {
        self.inner.uniform_jp_error(u_max).map_err(to_py)
    }

    /// Main term of `P(w) = w + a` as a quadratic in `a`.
    #[pyo3(signature = (u, panel_order = sifting_limits::main_term::DEFAULT_PANEL_ORDER))]
    fn main_term(&self, u: f64, panel_order: usize) -> PyResult<PyMainTerm> {
        let rule = QuadratureRule::new(panel_order).map_err(to_py)?;
        let inner = compute_quadratic(&self.inner, u, &rule).map_err(to_py)?;
        Ok(PyMainTerm { inner })
    }

    fn __repr__(&self) -> String {
        let p = self.inner.table().params();
        format!(
            "SieveEvaluator(kappa={}, truncation={}, circles={})",
            self.inner.kappa(),
            p.truncation(),
            p.nu_max()
        )
    }
}

/// `I~(a) = A a^2 + B a + C` at fixed `u`, with its truncation bound.
#[pyclass(name = "MainTerm", module = "siftlim", frozen)]
struct PyMainTerm {
    inner: MainTermQuadratic,
}

#[pymethods]
impl PyMainTerm {
    #[getter]
    fn kappa(&self) -> u32 {
        self.inner.kappa
    }

    #[getter]
    fn u(&self) -> f64 {
        self.inner.u
    }

    /// `(A, B, C)`.
    #[getter]
    fn coefficients(&self) -> (f64, f64, f64) {
        self.inner.coefficients()
    }

    #[getter]
    fn err(&self) -> f64 {
        self.inner.err
    }

    #[getter]
    fn quad_error(&self) -> f64 {
        self.inner.quad_error
    }

    fn __call__(&self, a: f64) -> f64 {
        self.inner.evaluate(a)
    }

    /// `(a*, I~(a*))` maximizing over `0 < a < 1`.
    fn optimum(&self) -> (f64, f64) {
        let best = optimal_a(&self.inner);
        (best.a, best.value)
    }

    fn __repr__(&self) -> String {
        let (a, b, c) = self.inner.coefficients();
        format!("MainTerm(kappa={}, u={}, A={a:e}, B={b:e}, C={c:e}, err={:e})",
            self.inner.kappa, self.inner.u, self.inner.err)
    }
}

/// A row `(kappa, u, a, I~, err, beta)`.
#[pyclass(name = "SiftingResult", module = "siftlim", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySiftingResult {
    kappa: u32,
    u: f64,
    a: f64,
    i_tilde: f64,
    err: f64,
    beta: f64,
    dhr_beta: Option<f64>,
}

impl From<SiftingResult> for PySiftingResult {
    fn from(r: SiftingResult) -> Self {
        Self {
            kappa: r.kappa,
            u: r.u,
            a: r.a,
            i_tilde: r.i_tilde,
            err: r.err,
            beta: r.beta,
            dhr_beta: r.dhr_beta,
        }
    }
}

#[pymethods]
impl PySiftingResult {
    fn certified(&self) -> bool {
        self.i_tilde > self.err
    }

    fn __repr__(&self) -> String {
        format!(
            "SiftingResult(kappa={}, beta={:.6}, u={:.6}, a={:.6}, I={:e}, err={:e})",
            self.kappa, self.beta, self.u, self.a, self.i_tilde, self.err
        )
    }
}

/// Method-of-steps solution of the delay equation for `j`.
#[pyclass(name = "DdeSolution", module = "siftlim", frozen)]
struct PyDdeSolution {
    inner: DdeSolution,
}

#[pymethods]
impl PyDdeSolution {
    #[new]
    #[pyo3(signature = (kappa, u_max, tol = dde_oracle::DEFAULT_TOL))]
    fn new(kappa: u32, u_max: f64, tol: f64) -> PyResult<Self> {
        Ok(Self { inner: dde_oracle::solve_j(kappa, u_max, tol).map_err(to_py)? })
    }

    fn j(&self, u: f64) -> PyResult<f64> {
        self.inner.j(u).map_err(to_py)
    }

    fn j_prime(&self, u: f64) -> PyResult<f64> {
        self.inner.j_prime(u).map_err(to_py)
    }

    #[getter]
    fn error_estimate(&self) -> f64 {
        self.inner.error_estimate()
    }
}

/// Smallest `u` with a certified positive main term, and `beta = 2u + 1`.
#[pyfunction]
#[pyo3(signature = (kappa, u_tol = optimizer::DEFAULT_U_TOL, truncation = ChainParameters::DEFAULT_TRUNCATION, circles = ChainParameters::DEFAULT_NU_MAX))]
fn find_beta(
    py: Python<'_>,
    kappa: u32,
    u_tol: f64,
    truncation: usize,
    circles: usize,
) -> PyResult<PySiftingResult> {
    let params = chain(truncation, circles)?;
    py.detach(|| {
        Optimizer::new(kappa, params, QuadratureRule::default())?.find_beta(u_tol)
    })
    .map(Into::into)
    .map_err(to_py)
}

/// For each `kappa`: `(published point re-evaluated, optimized limit)`.
#[pyfunction]
#[pyo3(signature = (kappas = None, u_tol = optimizer::DEFAULT_U_TOL))]
fn table2(
    py: Python<'_>,
    kappas: Option<Vec<u32>>,
    u_tol: f64,
) -> PyResult<Vec<(PySiftingResult, PySiftingResult)>> {
    let kappas = kappas.unwrap_or_else(|| optimizer::KAPPA_RANGE.collect());
    let rows = py
        .detach(|| {
            optimizer::table2(&kappas, ChainParameters::default(), &QuadratureRule::default(), u_tol)
        })
        .map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.published.into(), r.optimized.into())).collect())
}

/// Published rows as `(kappa, beta, u, a, I~, error)` tuples.
#[pyfunction]
fn published_table() -> Vec<(u32, f64, f64, f64, f64, f64)> {
    optimizer::PUBLISHED
        .iter()
        .map(|r| (r.kappa, r.beta, r.u, r.a, r.i_tilde, r.error))
        .collect()
}

/// Radii `c_0, ..., c_nu_max` of a chain.
#[pyfunction]
#[pyo3(signature = (circles = ChainParameters::DEFAULT_NU_MAX))]
fn chain_radii(circles: usize) -> Vec<f64> {
    kernel_series::chain_radii(circles)
}

/// Truncation bound for circle `nu` and order `lam`.
#[pyfunction]
#[pyo3(signature = (nu, lam, lambda_max = 11, truncation = ChainParameters::DEFAULT_TRUNCATION, circles = ChainParameters::DEFAULT_NU_MAX))]
fn truncation_bound(
    nu: usize,
    lam: usize,
    lambda_max: usize,
    truncation: usize,
    circles: usize,
) -> PyResult<f64> {
    let params = chain(truncation, circles)?;
    kernel_series::ErrorBudget::new(&params, lambda_max)
        .truncation_bound(nu, lam)
        .map_err(to_py)
}

#[pymodule]
fn siftlim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySieveEvaluator>()?;
    m.add_class::<PyMainTerm>()?;
    m.add_class::<PySiftingResult>()?;
    m.add_class::<PyDdeSolution>()?;
    m.add_function(wrap_pyfunction!(find_beta, m)?)?;
    m.add_function(wrap_pyfunction!(table2, m)?)?;
    m.add_function(wrap_pyfunction!(published_table, m)?)?;
    m.add_function(wrap_pyfunction!(chain_radii, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_bound, m)?)?;
    Ok(())
}
