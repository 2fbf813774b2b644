//! Asymptotic symbolic calculus: composition, adjoint, transpose and the
//! parametrix recursion, each paired with an exact finite-model oracle.
//!
//! Truncation has no asymptotic meaning on a finite box; every expansion
//! here is reported together with the operator-level residual against the
//! dense matrix oracle (Hilbert-Schmidt and spectral norms), so "the
//! expansion works" is always an observed statement, never an assumption.

use num_complex::Complex64;
use serde::Serialize;

use crate::diffops::{DerivativeKind, MultiIndex};
use crate::error::{Error, Result};
use crate::quantize::{extract_symbol, kernel, KernelMatrix};
use crate::report::csv_row;
use crate::symbol::{ellipticity_check, Symbol};

/// Grid floor below which a leading parametrix symbol counts as vanishing.
pub const PARAMETRIX_FLOOR: f64 = 1e-10;

/// Operator-level distance between a partial sum and its oracle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualPair {
    pub hs: f64,
    pub spectral: f64,
}

/// Partial sums of an asymptotic expansion with their oracle residuals.
#[derive(Debug, Clone)]
pub struct ExpansionResult {
    /// Partial sum with `N = i + 1` terms at index `i`.
    pub partial_sums: Vec<Symbol>,
    /// Residual of each partial sum against the exact oracle.
    pub residual_norms: Vec<ResidualPair>,
    /// Declared order drop per expansion term, `rho - delta` of the input.
    pub order_drop_per_term: f64,
}

impl ExpansionResult {
    pub fn residual(&self, n: usize) -> ResidualPair {
        self.residual_norms[n - 1]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "order_drop_per_term": self.order_drop_per_term,
            "residuals": self.residual_norms.iter().enumerate().map(|(i, r)| {
                serde_json::json!({"terms": i + 1, "hs": r.hs, "spectral": r.spectral})
            }).collect::<Vec<_>>(),
        })
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = vec!["terms,residual_hs,residual_spectral".to_string()];
        for (i, r) in self.residual_norms.iter().enumerate() {
            rows.push(csv_row(&[
                (i + 1).to_string(),
                format!("{:.17e}", r.hs),
                format!("{:.17e}", r.spectral),
            ]));
        }
        rows
    }
}

fn residual_against(oracle: &KernelMatrix, partial: &Symbol) -> ResidualPair {
    let diff = kernel(partial).sub(oracle).expect("same model");
    ResidualPair {
        hs: diff.frobenius_norm(),
        spectral: diff.spectral_norm(),
    }
}

fn order_drop(sigma: &Symbol) -> f64 {
    sigma.class().map(|c| c.rho - c.delta).unwrap_or(1.0)
}

fn expansion_from_terms(
    term_of: impl Fn(&MultiIndex) -> Result<Symbol>,
    oracle: &KernelMatrix,
    model_dim: usize,
    n_terms: u32,
    drop: f64,
) -> Result<ExpansionResult> {
    assert!((1..=4).contains(&n_terms), "term count outside 1..=4");
    let mut partial_sums = Vec::with_capacity(n_terms as usize);
    let mut residual_norms = Vec::with_capacity(n_terms as usize);
    let mut acc: Option<Symbol> = None;
    for shell in 0..n_terms {
        for alpha in MultiIndex::all_of_order(model_dim, shell) {
            let term = term_of(&alpha)?;
            acc = Some(match acc {
                Some(sum) => sum.add(&term)?,
                None => term,
            });
        }
        let current = acc.clone().expect("at least one term");
        residual_norms.push(residual_against(oracle, &current));
        partial_sums.push(current);
    }
    Ok(ExpansionResult { partial_sums, residual_norms, order_drop_per_term: drop })
}

/// Exact composition on the finite model:
/// `extract_symbol(kernel(sigma) . kernel(tau))`.
pub fn compose_exact(sigma: &Symbol, tau: &Symbol) -> Result<Symbol> {
    if sigma.model() != tau.model() {
        return Err(Error::ModelMismatch);
    }
    Ok(extract_symbol(&kernel(sigma).compose(&kernel(tau))?))
}

/// Truncated composition expansion
/// `sum_{|alpha| < N} (1/alpha!) D^(alpha)_theta sigma . Delta^alpha_k tau`,
/// with residuals against [`compose_exact`]. Note the derivative falls on
/// the left factor and the difference on the right one.
pub fn compose_asymptotic(sigma: &Symbol, tau: &Symbol, n_terms: u32) -> Result<ExpansionResult> {
    if sigma.model() != tau.model() {
        return Err(Error::ModelMismatch);
    }
    let oracle = kernel(sigma).compose(&kernel(tau))?;
    let drop = order_drop(sigma).min(order_drop(tau));
    expansion_from_terms(
        |alpha| {
            let left = sigma.theta_derivative(alpha, DerivativeKind::Falling);
            let right = tau.k_difference(alpha);
            Ok(left
                .mul_pointwise(&right)?
                .scale(Complex64::new(1.0 / alpha.factorial(), 0.0)))
        },
        &oracle,
        sigma.model().dim(),
        n_terms,
        drop,
    )
}

/// Exact `l^2` adjoint symbol: `extract_symbol(kernel(sigma)^*)`.
pub fn adjoint_exact(sigma: &Symbol) -> Symbol {
    extract_symbol(&kernel(sigma).adjoint())
}

/// Truncated adjoint expansion
/// `sum_{|alpha| < N} (1/alpha!) Delta^alpha_k D^(alpha)_theta conj(sigma)`,
/// with residuals against [`adjoint_exact`]. The inner product is
/// `(f, g) = sum f conj(g)`.
pub fn adjoint_asymptotic(sigma: &Symbol, n_terms: u32) -> Result<ExpansionResult> {
    let oracle = kernel(&adjoint_exact(sigma));
    let conj = sigma.conj();
    expansion_from_terms(
        |alpha| {
            Ok(conj
                .theta_derivative(alpha, DerivativeKind::Falling)
                .k_difference(alpha)
                .scale(Complex64::new(1.0 / alpha.factorial(), 0.0)))
        },
        &oracle,
        sigma.model().dim(),
        n_terms,
        order_drop(sigma),
    )
}

/// Exact transpose symbol under the bilinear pairing `<f, g> = sum f g`:
/// `extract_symbol(kernel(sigma)^T)`.
pub fn transpose_exact(sigma: &Symbol) -> Symbol {
    extract_symbol(&kernel(sigma).transpose())
}

/// Truncated transpose expansion
/// `sum_{|alpha| < N} (1/alpha!) Delta^alpha_k D^(alpha)_theta sigma(k, -theta)`,
/// with residuals against [`transpose_exact`]. The grid reflection is exact.
pub fn transpose_asymptotic(sigma: &Symbol, n_terms: u32) -> Result<ExpansionResult> {
    let oracle = kernel(&transpose_exact(sigma));
    let reflected = sigma.reflect_theta();
    expansion_from_terms(
        |alpha| {
            Ok(reflected
                .theta_derivative(alpha, DerivativeKind::Falling)
                .k_difference(alpha)
                .scale(Complex64::new(1.0 / alpha.factorial(), 0.0)))
        },
        &oracle,
        sigma.model().dim(),
        n_terms,
        order_drop(sigma),
    )
}

/// Residuals of the truncated parametrix at one truncation level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParametrixResidual {
    pub terms: usize,
    pub left_hs: f64,
    pub left_spectral: f64,
    pub right_hs: f64,
    pub right_spectral: f64,
}

/// Truncated parametrix: correction symbols and per-level residuals of
/// `Op(sum V) Op(sum U) - I` (left) and `Op(sum U) Op(sum V) - I` (right).
#[derive(Debug, Clone)]
pub struct ParametrixResult {
    pub v_terms: Vec<Symbol>,
    pub residuals: Vec<ParametrixResidual>,
    /// Number of nonzero expansion terms entering each correction level.
    pub term_counts: Vec<usize>,
}

impl ParametrixResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "term_counts": self.term_counts,
            "residuals": self.residuals,
        })
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows =
            vec!["terms,left_hs,left_spectral,right_hs,right_spectral".to_string()];
        for r in &self.residuals {
            rows.push(csv_row(&[
                r.terms.to_string(),
                format!("{:.17e}", r.left_hs),
                format!("{:.17e}", r.left_spectral),
                format!("{:.17e}", r.right_hs),
                format!("{:.17e}", r.right_spectral),
            ]));
        }
        rows
    }
}

/// Build the truncated parametrix of the operator with expansion
/// `U ~ sum_l U_l`: `V_0 = 1 / sigma_{U_0}` and for `1 <= N' <= n_corrections`
///
/// ```text
/// V_N' = (-1/sigma_{U_0}) sum_{j<N'} sum_{l<N'} sum_{|gamma| = N'-j-l}
///        (1/gamma!) [D^(gamma)_theta V_j] [Delta^gamma_k U_l]
/// ```
///
/// following the triple-sum constraint literally: `gamma = 0` contributes
/// exactly when `j + l = N'`, which cannot happen with a single-term `U`.
/// The leading symbol must pass the ellipticity certificate and stay above
/// [`PARAMETRIX_FLOOR`] in modulus on the whole grid.
pub fn parametrix(u_terms: &[Symbol], n_corrections: u32) -> Result<ParametrixResult> {
    assert!(!u_terms.is_empty(), "need at least the leading symbol");
    let u0 = &u_terms[0];
    let model = u0.model().clone();
    for u in u_terms {
        if u.model() != &model {
            return Err(Error::ModelMismatch);
        }
    }
    let mu = u0.class().map(|c| c.mu).unwrap_or(0.0);
    let ell = ellipticity_check(u0, mu);
    if !ell.elliptic {
        return Err(Error::NotElliptic { certificate: ell.certificate_c });
    }
    let recip = u0.reciprocal(PARAMETRIX_FLOOR)?;

    let dim = model.dim();
    let mut v_terms: Vec<Symbol> = vec![recip.clone()];
    let mut term_counts = vec![1usize];
    for level in 1..=n_corrections as usize {
        let mut acc =
            Symbol::from_table(&model, vec![Complex64::ZERO; model.size() * model.size()])?;
        let mut count = 0usize;
        for (j, v_j) in v_terms.iter().enumerate().take(level) {
            for (l, u_l) in u_terms.iter().enumerate().take(level) {
                let gamma_order = level as i64 - j as i64 - l as i64;
                if gamma_order < 0 {
                    continue;
                }
                for gamma in MultiIndex::all_of_order(dim, gamma_order as u32) {
                    let dv = v_j.theta_derivative(&gamma, DerivativeKind::Falling);
                    let du = u_l.k_difference(&gamma);
                    let term = dv
                        .mul_pointwise(&du)?
                        .scale(Complex64::new(1.0 / gamma.factorial(), 0.0));
                    acc = acc.add(&term)?;
                    count += 1;
                }
            }
        }
        v_terms.push(acc.mul_pointwise(&recip)?.scale(-Complex64::ONE));
        term_counts.push(count);
    }

    // Residuals of the truncated inverses against the identity.
    let identity = KernelMatrix::identity(&model);
    let mut u_sum = kernel(&u_terms[0]);
    for u in &u_terms[1..] {
        u_sum = u_sum.add(&kernel(u))?;
    }
    let mut residuals = Vec::new();
    let mut v_sum: Option<KernelMatrix> = None;
    for (np, v) in v_terms.iter().enumerate() {
        let kv = kernel(v);
        v_sum = Some(match v_sum {
            Some(s) => s.add(&kv)?,
            None => kv,
        });
        let vs = v_sum.as_ref().unwrap();
        let left = vs.compose(&u_sum)?.sub(&identity)?;
        let right = u_sum.compose(vs)?.sub(&identity)?;
        residuals.push(ParametrixResidual {
            terms: np,
            left_hs: left.frobenius_norm(),
            left_spectral: left.spectral_norm(),
            right_hs: right.frobenius_norm(),
            right_spectral: right.spectral_norm(),
        });
    }

    Ok(ParametrixResult { v_terms, residuals, term_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LatticeModel;
    use crate::quantize::apply;
    use crate::symbol::{example1, example3, weight};
    use crate::testutil::{random_lattice_fn, random_symbol};

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn max_table_gap(a: &Symbol, b: &Symbol) -> f64 {
        a.table()
            .iter()
            .zip(b.table())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn compose_with_identity_is_identity() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let one = Symbol::constant(&model, Complex64::ONE);
        let sigma = random_symbol(&model, 1);
        assert!(max_table_gap(&compose_exact(&one, &sigma).unwrap(), &sigma) < 1e-12);
        assert!(max_table_gap(&compose_exact(&sigma, &one).unwrap(), &sigma) < 1e-12);
    }

    #[test]
    fn multipliers_compose_pointwise() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let b1 = Symbol::from_theta_fn(&model, |t| {
            Complex64::new((TWO_PI * t[0]).cos() + 2.0, 0.5 * (TWO_PI * t[0]).sin())
        });
        let b2 = Symbol::from_theta_fn(&model, |t| {
            Complex64::new(1.0, (TWO_PI * 2.0 * t[0]).sin())
        });
        let exact = compose_exact(&b1, &b2).unwrap();
        let pointwise = b1.mul_pointwise(&b2).unwrap();
        assert!(max_table_gap(&exact, &pointwise) < 1e-11);
    }

    #[test]
    fn shift_multiplier_squares() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let e1 = example1(&model, 1).unwrap();
        let exact = compose_exact(&e1, &e1).unwrap();
        let squared = e1.mul_pointwise(&e1).unwrap();
        assert!(max_table_gap(&exact, &squared) < 1e-11);
    }

    #[test]
    fn degenerate_expansions_are_exact_at_one_term() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        // theta-independent left factor
        let a = Symbol::from_k_fn(&model, |k| Complex64::new(1.0 / (1.0 + k[0] * k[0]), 1.0));
        let tau = random_symbol(&model, 2);
        let exp = compose_asymptotic(&a, &tau, 2).unwrap();
        assert!(exp.residual(1).hs < 1e-11, "{:?}", exp.residual_norms);
        // k-independent right factor
        let b = Symbol::from_theta_fn(&model, |t| {
            Complex64::from_polar(1.0, TWO_PI * t[0]) + Complex64::new(2.0, 0.0)
        });
        let sigma = random_symbol(&model, 3);
        let exp = compose_asymptotic(&sigma, &b, 2).unwrap();
        assert!(exp.residual(1).hs < 1e-11, "{:?}", exp.residual_norms);
    }

    /// The designated mixed test family for composition monotonicity:
    /// bounded smooth factors whose k-parts avoid the wrap seam.
    pub(crate) fn designated_compose_family(model: &LatticeModel) -> (Symbol, Symbol) {
        let sigma = Symbol::from_fn(model, |k, t| {
            Complex64::new(
                (1.0 + 1.0 / (1.0 + k[0] * k[0])) / (2.0 + (TWO_PI * t[0]).cos()),
                0.0,
            )
        })
        .with_class(0.0, 1.0, 0.0);
        let tau = Symbol::from_fn(model, |k, t| {
            Complex64::new((2.0 + (TWO_PI * t[0]).sin()) / (1.0 + k[0] * k[0]), 0.0)
        })
        .with_class(-2.0, 1.0, 0.0);
        (sigma, tau)
    }

    #[test]
    fn designated_mixed_family_residual_strictly_decreases() {
        // At hbar = 1/4, M = 32 the first three partial sums must each
        // strictly improve the operator residual.
        let model = LatticeModel::new(1, 0.25, 32).unwrap();
        let (sigma, tau) = designated_compose_family(&model);
        let exp = compose_asymptotic(&sigma, &tau, 3).unwrap();
        let r: Vec<f64> = exp.residual_norms.iter().map(|p| p.hs).collect();
        assert!(r[1] < r[0] && r[2] < r[1], "residuals not strictly decreasing: {r:?}");
    }

    #[test]
    fn adjoint_exact_fixed_points() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        // real multiplier is self-adjoint
        let b = Symbol::from_theta_fn(&model, |t| {
            Complex64::new(2.0 + (TWO_PI * t[0]).cos(), 0.0)
        });
        assert!(max_table_gap(&adjoint_exact(&b), &b) < 1e-11);
        // constant goes to its conjugate
        let c = Symbol::constant(&model, Complex64::new(1.5, -2.0));
        let star = adjoint_exact(&c);
        assert!(star
            .table()
            .iter()
            .all(|v| (v - Complex64::new(1.5, 2.0)).norm() < 1e-12));
        // example1 goes to e^{-2 pi i theta} - 1
        let e1 = example1(&model, 1).unwrap();
        let expect = Symbol::from_theta_fn(&model, |t| {
            Complex64::from_polar(1.0, -TWO_PI * t[0]) - Complex64::ONE
        });
        assert!(max_table_gap(&adjoint_exact(&e1), &expect) < 1e-11);
    }

    #[test]
    fn adjoint_is_involution() {
        let model = LatticeModel::new(2, 0.5, 6).unwrap();
        let sigma = random_symbol(&model, 5);
        let back = adjoint_exact(&adjoint_exact(&sigma));
        assert!(max_table_gap(&back, &sigma) < 1e-11);
    }

    #[test]
    fn adjoint_satisfies_inner_product_duality() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = random_symbol(&model, 6);
        let f = random_lattice_fn(&model, 7);
        let g = random_lattice_fn(&model, 8);
        let lhs: Complex64 = apply(&sigma, &f)
            .unwrap()
            .values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        let rhs: Complex64 = f
            .values
            .iter()
            .zip(&apply(&adjoint_exact(&sigma), &g).unwrap().values)
            .map(|(a, b)| a * b.conj())
            .sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn adjoint_expansion_exact_for_k_independent() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let b = Symbol::from_theta_fn(&model, |t| {
            Complex64::new((TWO_PI * t[0]).cos(), (TWO_PI * 3.0 * t[0]).sin() + 2.0)
        });
        let exp = adjoint_asymptotic(&b, 2).unwrap();
        assert!(exp.residual(1).hs < 1e-11);
        assert!(max_table_gap(&exp.partial_sums[0], &b.conj()) < 1e-12);
    }

    #[test]
    fn adjoint_expansion_residual_decreases_for_smooth_family() {
        let model = LatticeModel::new(1, 0.25, 32).unwrap();
        let sigma = Symbol::from_fn(&model, |k, t| {
            Complex64::from_polar(1.0 / (1.0 + k[0] * k[0]), TWO_PI * t[0])
        })
        .with_class(0.0, 1.0, 0.0);
        let exp = adjoint_asymptotic(&sigma, 3).unwrap();
        let r: Vec<f64> = exp.residual_norms.iter().map(|p| p.hs).collect();
        assert!(r[1] < r[0] && r[2] < r[1], "residuals: {r:?}");
    }

    #[test]
    fn real_k_only_symbol_is_self_adjoint_at_leading_order() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = Symbol::from_k_fn(&model, |k| Complex64::new(1.0 + k[0] * k[0], 0.0));
        let exp = adjoint_asymptotic(&sigma, 1).unwrap();
        assert!(max_table_gap(&exp.partial_sums[0], &sigma) < 1e-12);
        assert!(exp.residual(1).hs < 1e-11);
    }

    #[test]
    fn transpose_of_multiplier_reflects_theta() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let b = Symbol::from_theta_fn(&model, |t| {
            Complex64::from_polar(1.0, TWO_PI * t[0]) + Complex64::new(0.3, 0.7)
        });
        let exp = transpose_asymptotic(&b, 2).unwrap();
        assert!(exp.residual(1).hs < 1e-11);
        assert!(max_table_gap(&exp.partial_sums[0], &b.reflect_theta()) < 1e-12);

        // even multiplier is its own transpose
        let even = Symbol::from_theta_fn(&model, |t| {
            Complex64::new((TWO_PI * t[0]).cos(), 0.0)
        });
        assert!(max_table_gap(&transpose_exact(&even), &even) < 1e-11);
    }

    #[test]
    fn transpose_satisfies_bilinear_duality() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = random_symbol(&model, 9);
        let f = random_lattice_fn(&model, 10);
        let g = random_lattice_fn(&model, 11);
        // <T^t f, g> = <f, T g> with the bilinear (no conjugation) pairing
        let lhs: Complex64 = apply(&transpose_exact(&sigma), &f)
            .unwrap()
            .values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| a * b)
            .sum();
        let rhs: Complex64 = f
            .values
            .iter()
            .zip(&apply(&sigma, &g).unwrap().values)
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn transpose_expansion_residual_decreases_for_smooth_family() {
        let model = LatticeModel::new(1, 0.25, 32).unwrap();
        let sigma = Symbol::from_fn(&model, |k, t| {
            Complex64::from_polar(1.0 / (1.0 + k[0] * k[0]), TWO_PI * t[0])
        })
        .with_class(0.0, 1.0, 0.0);
        let exp = transpose_asymptotic(&sigma, 3).unwrap();
        let r: Vec<f64> = exp.residual_norms.iter().map(|p| p.hs).collect();
        assert!(r[1] < r[0] && r[2] < r[1], "residuals: {r:?}");
    }

    #[test]
    fn parametrix_of_k_only_elliptic_symbol_truncates() {
        let model = LatticeModel::new(1, 0.5, 32).unwrap();
        let u = Symbol::from_k_fn(&model, |k| Complex64::new(1.0 + k[0] * k[0], 0.0))
            .with_class(2.0, 1.0, 0.0);
        let result = parametrix(std::slice::from_ref(&u), 2).unwrap();
        // V_0 = 1/(1 + |k|^2); every correction vanishes term by term
        let v0_expected = u.reciprocal(1e-12).unwrap();
        assert!(max_table_gap(&result.v_terms[0], &v0_expected) < 1e-13);
        for v in &result.v_terms[1..] {
            assert!(v.table().iter().all(|z| z.norm() < 1e-12));
        }
        for r in &result.residuals {
            assert!(r.left_hs < 1e-10 && r.right_hs < 1e-10);
        }
    }

    #[test]
    fn parametrix_of_example3_is_exact_reciprocal() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        let c = Complex64::new(3.0, 0.0);
        let u = example3(&model, c);
        let result = parametrix(&[u], 1).unwrap();
        let expected = Symbol::from_theta_fn(&model, |t| {
            let s: f64 = t.iter().map(|&x| (TWO_PI * x).sin()).sum();
            (Complex64::new(0.0, 2.0 * s) + c).inv()
        });
        assert!(max_table_gap(&result.v_terms[0], &expected) < 1e-12);
        assert!(result.residuals[0].left_hs < 1e-10);
        assert!(result.residuals[0].right_hs < 1e-10);
    }

    #[test]
    fn parametrix_rejects_non_elliptic_leading_symbol() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let u = example1(&model, 1).unwrap(); // vanishes at theta = 0
        assert!(matches!(parametrix(&[u], 1), Err(Error::NotElliptic { .. })));
    }

    /// The designated mixed elliptic symbol for parametrix monotonicity:
    /// bounded, order zero, strictly positive.
    pub(crate) fn designated_parametrix_symbol(model: &LatticeModel) -> Symbol {
        Symbol::from_fn(model, |k, t| {
            Complex64::new(
                (2.0 + (TWO_PI * t[0]).cos()) * (1.0 + 1.0 / (1.0 + k[0] * k[0])),
                0.0,
            )
        })
        .with_class(0.0, 1.0, 0.0)
    }

    #[test]
    fn parametrix_residuals_decrease_for_mixed_elliptic_symbol() {
        let model = LatticeModel::new(1, 0.25, 32).unwrap();
        let u = designated_parametrix_symbol(&model);
        let result = parametrix(&[u], 2).unwrap();
        let left: Vec<f64> = result.residuals.iter().map(|r| r.left_hs).collect();
        let right: Vec<f64> = result.residuals.iter().map(|r| r.right_hs).collect();
        assert!(
            left[1] < left[0] && left[2] < left[1],
            "left residuals not strictly decreasing: {left:?}"
        );
        assert!(
            right[1] < right[0] && right[2] < right[1],
            "right residuals not strictly decreasing: {right:?}"
        );
    }

    #[test]
    fn parametrix_first_correction_helps_for_growing_symbol() {
        // Order-2 elliptic symbol: the growth meets the wrap seam, so only
        // the first correction is asserted to improve the left residual.
        let model = LatticeModel::new(1, 0.25, 32).unwrap();
        let u = Symbol::from_fn(&model, |k, t| {
            Complex64::new((1.0 + k[0] * k[0]) * (2.0 + (TWO_PI * t[0]).cos()), 0.0)
        })
        .with_class(2.0, 1.0, 0.0);
        let result = parametrix(&[u], 1).unwrap();
        assert!(result.residuals[1].left_hs < result.residuals[0].left_hs);
        assert!(result.residuals[1].right_hs < result.residuals[0].right_hs);
    }

    #[test]
    fn weighted_shift_family_matches_spec_example() {
        // sigma = (1+|k|) e^{2 pi i theta}, tau = (1+|k|)^{-1}: the
        // expansion truncates after two terms up to the |k| kink at the
        // origin; the second partial sum must remove most of the residual
        // and later sums must not regress.
        let model = LatticeModel::new(1, 0.25, 32).unwrap();
        let sigma = weight(&model, 1.0)
            .mul_pointwise(&Symbol::from_theta_fn(&model, |t| {
                Complex64::from_polar(1.0, TWO_PI * t[0])
            }))
            .unwrap();
        let tau = weight(&model, -1.0);
        let exp = compose_asymptotic(&sigma, &tau, 3).unwrap();
        let r: Vec<f64> = exp.residual_norms.iter().map(|p| p.hs).collect();
        assert!(r[1] <= r[0] && r[2] <= r[1] + 1e-12, "residuals: {r:?}");
        assert!(r[1] < 0.1 * r[0], "second term should remove most of the residual: {r:?}");
    }
}
