//! Python extension module exposing the lattice model, symbols, the
//! quantization map and the main checks and solvers. Report-like results
//! come back as JSON strings so Python callers can `json.loads` them;
//! numeric data crosses as native lists of complex numbers.

use std::collections::HashMap;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lattice_pdo::analysis;
use lattice_pdo::calculus;
use lattice_pdo::dsl;
use lattice_pdo::pde;
use lattice_pdo::quantize;
use lattice_pdo::report::to_json;
use lattice_pdo::symbol::{self, SymbolStructure};
use lattice_pdo::{LatticeFunction, LatticeModel};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Finite periodic lattice model with its dual grid.
#[pyclass(name = "Model", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: LatticeModel,
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(dim: usize, hbar: f64, points: usize) -> PyResult<Self> {
        Ok(Self { inner: LatticeModel::new(dim, hbar, points).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.inner.hbar()
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    /// Physical coordinates of a flat box index.
    fn point(&self, idx: usize) -> Vec<f64> {
        self.inner.point(idx)
    }

    /// Grid coordinates of a flat grid index.
    fn theta(&self, idx: usize) -> Vec<f64> {
        self.inner.theta(idx)
    }

    fn norm_k(&self, idx: usize) -> f64 {
        self.inner.norm_k(idx)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(dim={}, hbar={}, points={})",
            self.inner.dim(),
            self.inner.hbar(),
            self.inner.points()
        )
    }
}

/// A symbol tabulated over box x grid.
#[pyclass(name = "Symbol", skip_from_py_object)]
#[derive(Clone)]
struct PySymbol {
    inner: symbol::Symbol,
}

#[pymethods]
impl PySymbol {
    /// Built-in symbol from its textual form, e.g. "example3(c=3)".
    #[staticmethod]
    fn builtin(model: &PyModel, spec: &str) -> PyResult<Self> {
        Ok(Self { inner: symbol::builtin(spec, &model.inner).map_err(err)? })
    }

    /// Tabulate an expression, with optional named complex parameters.
    #[staticmethod]
    #[pyo3(signature = (model, source, params=None))]
    fn expression(
        model: &PyModel,
        source: &str,
        params: Option<HashMap<String, Complex64>>,
    ) -> PyResult<Self> {
        let expr = dsl::parse(source).map_err(err)?;
        let params = params.unwrap_or_default();
        Ok(Self {
            inner: symbol::Symbol::from_expr(&model.inner, &expr, &params).map_err(err)?,
        })
    }

    /// Declare the class parameters (mu, rho, delta).
    fn with_class(&self, mu: f64, rho: f64, delta: f64) -> Self {
        Self { inner: self.inner.clone().with_class(mu, rho, delta) }
    }

    fn value(&self, box_idx: usize, grid_idx: usize) -> Complex64 {
        self.inner.value(box_idx, grid_idx)
    }

    fn table(&self) -> Vec<Complex64> {
        self.inner.table().to_vec()
    }

    #[getter]
    fn structure(&self) -> &'static str {
        match self.inner.structure() {
            SymbolStructure::General => "general",
            SymbolStructure::ThetaOnly => "theta-only",
            SymbolStructure::KOnly => "k-only",
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Symbol(points={}, structure={})",
            self.inner.model().points(),
            self.structure()
        )
    }
}

fn lattice_fn(model: &PyModel, values: Vec<Complex64>) -> PyResult<LatticeFunction> {
    LatticeFunction::from_values(&model.inner, values).map_err(err)
}

/// Forward transform: box samples to grid samples.
#[pyfunction]
fn forward_fourier(model: &PyModel, values: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    Ok(lattice_pdo::forward_fourier(&lattice_fn(model, values)?).values)
}

/// Inverse transform: grid samples to box samples.
#[pyfunction]
fn inverse_fourier(model: &PyModel, values: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let f = lattice_pdo::TorusFunction::from_values(&model.inner, values).map_err(err)?;
    Ok(lattice_pdo::inverse_fourier(&f).values)
}

/// Apply the operator with the given symbol to box samples.
#[pyfunction]
fn apply(symbol: &PySymbol, values: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let model = PyModel { inner: symbol.inner.model().clone() };
    let f = lattice_fn(&model, values)?;
    Ok(quantize::apply(&symbol.inner, &f).map_err(err)?.values)
}

/// Dense kernel of the operator, row-major.
#[pyfunction]
fn kernel_entries(symbol: &PySymbol) -> Vec<Vec<Complex64>> {
    let k = quantize::kernel(&symbol.inner);
    let size = symbol.inner.model().size();
    (0..size)
        .map(|r| (0..size).map(|c| k.entry(r, c)).collect())
        .collect()
}

/// Recover the symbol of an arbitrary dense operator matrix.
#[pyfunction]
fn extract_symbol(model: &PyModel, rows: Vec<Vec<Complex64>>) -> PyResult<PySymbol> {
    let size = model.inner.size();
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(PyValueError::new_err(format!("matrix must be {size} x {size}")));
    }
    let mat = nalgebra_matrix(size, &rows);
    let k = quantize::KernelMatrix::from_matrix(&model.inner, mat).map_err(err)?;
    Ok(PySymbol { inner: quantize::extract_symbol(&k) })
}

fn nalgebra_matrix(
    size: usize,
    rows: &[Vec<Complex64>],
) -> nalgebra::DMatrix<Complex64> {
    nalgebra::DMatrix::from_fn(size, size, |r, c| rows[r][c])
}

/// (symbol L2 norm, kernel Frobenius norm, gap): the Hilbert-Schmidt
/// identity.
#[pyfunction]
fn hs_check(symbol: &PySymbol) -> (f64, f64, f64) {
    let rep = analysis::hs_norm_check(&symbol.inner);
    (rep.symbol_norm, rep.frobenius_norm, rep.gap)
}

/// Ellipticity certificate as a JSON string.
#[pyfunction]
fn ellipticity(symbol: &PySymbol, mu: f64) -> String {
    to_json(&symbol::ellipticity_check(&symbol.inner, mu))
}

/// Measured class seminorm constants as a JSON string.
#[pyfunction]
fn seminorms(symbol: &PySymbol, max_alpha: u32, max_beta: u32) -> PyResult<String> {
    Ok(to_json(&symbol::seminorm_estimate(&symbol.inner, max_alpha, max_beta).map_err(err)?))
}

/// Per-N (hs, spectral) residuals of the composition expansion against the
/// exact kernel product.
#[pyfunction]
fn compose_residuals(
    sigma: &PySymbol,
    tau: &PySymbol,
    terms: u32,
) -> PyResult<Vec<(f64, f64)>> {
    let exp = calculus::compose_asymptotic(&sigma.inner, &tau.inner, terms).map_err(err)?;
    Ok(exp.residual_norms.iter().map(|r| (r.hs, r.spectral)).collect())
}

/// Per-N residuals of the adjoint expansion against the conjugate
/// transpose oracle.
#[pyfunction]
fn adjoint_residuals(symbol: &PySymbol, terms: u32) -> PyResult<Vec<(f64, f64)>> {
    let exp = calculus::adjoint_asymptotic(&symbol.inner, terms).map_err(err)?;
    Ok(exp.residual_norms.iter().map(|r| (r.hs, r.spectral)).collect())
}

/// Per-N residuals of the transpose expansion against the transpose oracle.
#[pyfunction]
fn transpose_residuals(symbol: &PySymbol, terms: u32) -> PyResult<Vec<(f64, f64)>> {
    let exp = calculus::transpose_asymptotic(&symbol.inner, terms).map_err(err)?;
    Ok(exp.residual_norms.iter().map(|r| (r.hs, r.spectral)).collect())
}

/// Parametrix residual report as a JSON string.
#[pyfunction]
fn parametrix(symbol: &PySymbol, corrections: u32) -> PyResult<String> {
    let result =
        calculus::parametrix(std::slice::from_ref(&symbol.inner), corrections).map_err(err)?;
    Ok(result.to_json().to_string())
}

/// Garding constants report as a JSON string.
#[pyfunction]
fn garding(symbol: &PySymbol, m: f64) -> PyResult<String> {
    Ok(to_json(&analysis::garding_constants(&symbol.inner, m).map_err(err)?))
}

/// Sharp Garding report as a JSON string.
#[pyfunction]
fn sharp_garding(symbol: &PySymbol, m: f64) -> PyResult<String> {
    Ok(to_json(&analysis::sharp_garding_check(&symbol.inner, m).map_err(err)?))
}

/// Frobenius gap of the lattice-torus conjugation identity.
#[pyfunction]
fn link_gap(symbol: &PySymbol) -> f64 {
    analysis::link_check(&symbol.inner).gap_frobenius
}

/// (predicted bound, empirical norm, dominated) of the Young l^p bound.
#[pyfunction]
fn young_bound(symbol: &PySymbol, p: f64) -> (f64, f64, bool) {
    let rep = analysis::lp_bound_young(&symbol.inner, p);
    (rep.predicted_bound, rep.empirical_norm, rep.dominated)
}

/// Schatten membership report as a JSON string.
#[pyfunction]
fn schatten(symbol: &PySymbol, p: f64) -> PyResult<String> {
    Ok(to_json(&analysis::schatten_report(&symbol.inner, p).map_err(err)?))
}

/// Solve Op(sigma) f = g; returns (solution, residual, weighted ratio).
#[pyfunction]
#[pyo3(signature = (symbol, rhs, method="direct", corrections=2))]
fn solve_elliptic(
    symbol: &PySymbol,
    rhs: Vec<Complex64>,
    method: &str,
    corrections: u32,
) -> PyResult<(Vec<Complex64>, f64, f64)> {
    let model = PyModel { inner: symbol.inner.model().clone() };
    let g = lattice_fn(&model, rhs)?;
    let method = match method {
        "inverse-multiplier" => pde::EllipticMethod::InverseMultiplier,
        "direct" => pde::EllipticMethod::DirectMatrix,
        "parametrix" => pde::EllipticMethod::Parametrix { corrections, defect_sweep: true },
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    };
    let sol = pde::solve_elliptic(&symbol.inner, &g, method).map_err(err)?;
    Ok((
        sol.solution.values,
        sol.report.residual,
        sol.report.weighted_ratio_s2,
    ))
}

/// March the parabolic problem; returns (final state, certificate C,
/// certified flag).
#[pyfunction]
#[pyo3(signature = (generator, initial, t_final, dt, scheme="implicit-euler"))]
fn solve_parabolic(
    generator: &PySymbol,
    initial: Vec<Complex64>,
    t_final: f64,
    dt: f64,
    scheme: &str,
) -> PyResult<(Vec<Complex64>, f64, bool)> {
    let model = PyModel { inner: generator.inner.model().clone() };
    let w0 = lattice_fn(&model, initial)?;
    let scheme = match scheme {
        "implicit-euler" => pde::ParabolicScheme::ImplicitEuler,
        "exact-multiplier" => pde::ParabolicScheme::ExactMultiplier,
        other => return Err(PyValueError::new_err(format!("unknown scheme `{other}`"))),
    };
    let problem = pde::ParabolicProblem {
        generator: generator.inner.clone(),
        initial: w0,
        source: vec![],
        t_final,
        dt,
        scheme,
    };
    let sol = pde::solve_parabolic(&problem).map_err(err)?;
    Ok((
        sol.final_state().values.clone(),
        sol.energy.certificate_c,
        sol.energy.certified,
    ))
}

/// Worst Plancherel gap over seeded random functions; a quick self-check.
#[pyfunction]
fn plancherel_gap(model: &PyModel, trials: u32) -> f64 {
    let mut worst = 0.0f64;
    for seed in 0..trials {
        let values: Vec<Complex64> = (0..model.inner.size())
            .map(|i| {
                let x = ((seed as f64 + 1.0) * (i as f64 + 0.37)).sin();
                Complex64::new(x, -0.3 * x)
            })
            .collect();
        let f = LatticeFunction::from_values(&model.inner, values).unwrap();
        let hat = lattice_pdo::forward_fourier(&f);
        worst = worst.max((f.l2_norm() - hat.grid_l2_norm()).abs());
    }
    worst
}

#[pymodule]
fn lattice_pdo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PySymbol>()?;
    m.add_function(wrap_pyfunction!(forward_fourier, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_fourier, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_entries, m)?)?;
    m.add_function(wrap_pyfunction!(extract_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(hs_check, m)?)?;
    m.add_function(wrap_pyfunction!(ellipticity, m)?)?;
    m.add_function(wrap_pyfunction!(seminorms, m)?)?;
    m.add_function(wrap_pyfunction!(compose_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(adjoint_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(transpose_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(parametrix, m)?)?;
    m.add_function(wrap_pyfunction!(garding, m)?)?;
    m.add_function(wrap_pyfunction!(sharp_garding, m)?)?;
    m.add_function(wrap_pyfunction!(link_gap, m)?)?;
    m.add_function(wrap_pyfunction!(young_bound, m)?)?;
    m.add_function(wrap_pyfunction!(schatten, m)?)?;
    m.add_function(wrap_pyfunction!(solve_elliptic, m)?)?;
    m.add_function(wrap_pyfunction!(solve_parabolic, m)?)?;
    m.add_function(wrap_pyfunction!(plancherel_gap, m)?)?;
    Ok(())
}
