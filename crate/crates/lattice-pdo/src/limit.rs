//! Small-spacing convergence studies: forward differences against exact
//! partial derivatives, rescaled falling derivatives against their
//! Euclidean limits, and the truncated composition formula against its
//! Euclidean counterpart. Everything is evaluated in closed form on a
//! fixed physical window, so the only parameter that varies is the lattice
//! spacing.

use num_complex::Complex64;
use serde::Serialize;

use crate::diffops::MultiIndex;
use crate::report::{csv_row, fit_line, LineFit};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One-dimensional closed-form function with exact derivatives of every
/// order.
#[derive(Debug, Clone)]
pub enum ClosedForm1d {
    Const(Complex64),
    /// `c_0 + c_1 x + c_2 x^2 + ...`
    Poly(Vec<f64>),
    /// `e^{2 pi i f x}`
    ComplexExp(f64),
    /// `cos(2 pi f x)`
    Cos2Pi(f64),
    /// `e^{-x^2}`
    Gaussian,
}

impl ClosedForm1d {
    /// Value of the `order`-th derivative at `x` (order 0 is the value).
    pub fn derivative(&self, order: u32, x: f64) -> Complex64 {
        match self {
            ClosedForm1d::Const(c) => {
                if order == 0 {
                    *c
                } else {
                    Complex64::ZERO
                }
            }
            ClosedForm1d::Poly(coeffs) => {
                let mut acc = Complex64::ZERO;
                for (j, &c) in coeffs.iter().enumerate() {
                    let j = j as u32;
                    if j < order {
                        continue;
                    }
                    // c * j (j-1) ... (j-order+1) x^{j-order}
                    let mut factor = c;
                    for l in 0..order {
                        factor *= (j - l) as f64;
                    }
                    acc += Complex64::new(factor * x.powi((j - order) as i32), 0.0);
                }
                acc
            }
            ClosedForm1d::ComplexExp(f) => {
                let base = Complex64::from_polar(1.0, TWO_PI * f * x);
                (Complex64::new(0.0, TWO_PI * f)).powu(order) * base
            }
            ClosedForm1d::Cos2Pi(f) => {
                let w = TWO_PI * f;
                let phase = w * x + order as f64 * std::f64::consts::FRAC_PI_2;
                Complex64::new(w.powi(order as i32) * phase.cos(), 0.0)
            }
            ClosedForm1d::Gaussian => {
                // d^n/dx^n e^{-x^2} = (-1)^n H_n(x) e^{-x^2}
                let mut h_prev = 1.0f64;
                let mut h = 1.0f64;
                for n in 0..order {
                    let next = 2.0 * x * h - 2.0 * n as f64 * h_prev;
                    h_prev = h;
                    h = next;
                }
                let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
                Complex64::new(sign * h * (-x * x).exp(), 0.0)
            }
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.derivative(0, x)
    }
}

/// Tensor product of one-dimensional closed forms.
#[derive(Debug, Clone)]
pub struct ClosedForm(pub Vec<ClosedForm1d>);

impl ClosedForm {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.0
            .iter()
            .zip(x)
            .map(|(f, &xi)| f.eval(xi))
            .product()
    }

    /// Exact mixed partial derivative `partial^alpha`.
    pub fn partial(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        self.0
            .iter()
            .zip(&alpha.0)
            .zip(x)
            .map(|((f, &a), &xi)| f.derivative(a, xi))
            .product()
    }

    /// Forward difference of multi-order `alpha` with step `hbar`,
    /// evaluated from the closed form.
    pub fn forward_difference(&self, alpha: &MultiIndex, hbar: f64, x: &[f64]) -> Complex64 {
        fn rec(f: &ClosedForm, alpha: &mut Vec<u32>, hbar: f64, x: &mut Vec<f64>) -> Complex64 {
            for axis in 0..alpha.len() {
                if alpha[axis] > 0 {
                    alpha[axis] -= 1;
                    let lo = rec(f, alpha, hbar, x);
                    x[axis] += hbar;
                    let hi = rec(f, alpha, hbar, x);
                    x[axis] -= hbar;
                    alpha[axis] += 1;
                    return (hi - lo) / hbar;
                }
            }
            f.eval(x)
        }
        rec(self, &mut alpha.0.clone(), hbar, &mut x.to_vec())
    }

    /// Rescaled falling derivative: per axis the operator
    /// `prod_{l=0}^{beta-1} ((2 pi i)^{-1} d/dx - hbar l)`, expanded into
    /// exact derivatives.
    pub fn falling_derivative(&self, beta: &MultiIndex, hbar: f64, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::ONE;
        for ((f, &b), &xi) in self.0.iter().zip(&beta.0).zip(x) {
            // coefficients of prod_{l=0}^{b-1} (y - hbar l)
            let mut coeffs = vec![Complex64::ONE];
            for l in 0..b {
                let shift = Complex64::new(hbar * l as f64, 0.0);
                let mut next = vec![Complex64::ZERO; coeffs.len() + 1];
                for (j, &c) in coeffs.iter().enumerate() {
                    next[j + 1] += c;
                    next[j] -= c * shift;
                }
                coeffs = next;
            }
            let mut axis_val = Complex64::ZERO;
            for (j, &c) in coeffs.iter().enumerate() {
                // y^j -> (2 pi i)^{-j} d^j/dx^j
                let dj = f.derivative(j as u32, xi);
                axis_val += c * dj / Complex64::new(0.0, TWO_PI).powu(j as u32);
            }
            acc *= axis_val;
        }
        acc
    }
}

/// Uniform sample of `[-1, 1]^n`.
pub fn window(dim: usize, points_per_axis: usize) -> Vec<Vec<f64>> {
    assert!(points_per_axis >= 2);
    let axis: Vec<f64> = (0..points_per_axis)
        .map(|i| -1.0 + 2.0 * i as f64 / (points_per_axis - 1) as f64)
        .collect();
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for partial in &out {
            for &x in &axis {
                let mut p = partial.clone();
                p.push(x);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub hbar: f64,
    pub error: f64,
}

/// Errors per spacing with the fitted convergence order.
#[derive(Debug, Clone, Serialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Fit of `ln error` against `ln hbar`; absent when every error is at
    /// roundoff level.
    pub fit: Option<LineFit>,
    /// All errors at roundoff: the discrete operator is exact here.
    pub exact: bool,
    /// Set when fewer than 4 spacings, a spacing span below 8x, or a fit
    /// with `r2 < 0.99` make the fitted order unreliable.
    pub flagged: bool,
}

impl RateTable {
    fn from_errors(hbars: &[f64], errors: Vec<f64>) -> Self {
        let rows: Vec<RateRow> = hbars
            .iter()
            .zip(&errors)
            .map(|(&hbar, &error)| RateRow { hbar, error })
            .collect();
        let usable: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.error > 1e-14)
            .map(|r| (r.hbar.ln(), r.error.ln()))
            .collect();
        let exact = usable.is_empty();
        let fit = if usable.len() >= 2 {
            let xs: Vec<f64> = usable.iter().map(|&(x, _)| x).collect();
            let ys: Vec<f64> = usable.iter().map(|&(_, y)| y).collect();
            Some(fit_line(&xs, &ys))
        } else {
            None
        };
        let span_ok = hbars.len() >= 4
            && hbars.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                / hbars.iter().copied().fold(f64::INFINITY, f64::min)
                >= 8.0 - 1e-12;
        let flagged = !exact
            && (!span_ok || fit.map(|f| f.r2 < 0.99).unwrap_or(true));
        RateTable { rows, fit, exact, flagged }
    }

    pub fn fitted_order(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// CSV rows `(hbar, error, fitted_order, r2)`.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut out = vec!["hbar,error,fitted_order,r2".to_string()];
        let (order, r2) = match self.fit {
            Some(f) => (format!("{:.6}", f.slope), format!("{:.6}", f.r2)),
            None => ("exact".to_string(), "exact".to_string()),
        };
        for r in &self.rows {
            out.push(csv_row(&[
                format!("{}", r.hbar),
                format!("{:.17e}", r.error),
                order.clone(),
                r2.clone(),
            ]));
        }
        out
    }
}

/// Convergence of the forward difference to the exact partial derivative
/// over the window: `max_x |Delta^alpha_hbar f(x) - partial^alpha f(x)|`
/// per spacing, with the fitted order (1.0 expected for forward
/// differences).
pub fn difference_convergence(
    f: &ClosedForm,
    alpha: &MultiIndex,
    hbars: &[f64],
    points_per_axis: usize,
) -> RateTable {
    let win = window(f.dim(), points_per_axis);
    let errors = hbars
        .iter()
        .map(|&hbar| {
            win.iter()
                .map(|x| (f.forward_difference(alpha, hbar, x) - f.partial(alpha, x)).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    RateTable::from_errors(hbars, errors)
}

/// Convergence of the rescaled falling derivative to
/// `(2 pi i)^{-|beta|} partial^beta`: the shifts carry explicit `hbar`
/// factors, so the gap is first order in the spacing.
pub fn rescaled_derivative_convergence(
    f: &ClosedForm,
    beta: &MultiIndex,
    hbars: &[f64],
    points_per_axis: usize,
) -> RateTable {
    let win = window(f.dim(), points_per_axis);
    let errors = hbars
        .iter()
        .map(|&hbar| {
            win.iter()
                .map(|x| {
                    let target = f.partial(beta, x)
                        / Complex64::new(0.0, TWO_PI).powu(beta.order());
                    (f.falling_derivative(beta, hbar, x) - target).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    RateTable::from_errors(hbars, errors)
}

/// Separable phase-space symbol `sigma(x, xi) = sigma_x(x) sigma_xi(xi)`.
#[derive(Debug, Clone)]
pub struct SeparableSymbol {
    pub x_part: ClosedForm,
    pub xi_part: ClosedForm,
}

impl SeparableSymbol {
    pub fn constant_in_x(xi_part: ClosedForm) -> Self {
        let dim = xi_part.dim();
        SeparableSymbol {
            x_part: ClosedForm(vec![ClosedForm1d::Const(Complex64::ONE); dim]),
            xi_part,
        }
    }

    pub fn constant_in_xi(x_part: ClosedForm) -> Self {
        let dim = x_part.dim();
        SeparableSymbol {
            xi_part: ClosedForm(vec![ClosedForm1d::Const(Complex64::ONE); dim]),
            x_part,
        }
    }
}

/// Gap between the lattice and Euclidean truncated composition formulas
/// for separable symbols: per spacing the maximum over the window of
///
/// ```text
/// | sum_{|a| < N} (1/a!) d^(a)_hbar sigma . Delta^a_hbar tau
///   - sum_{|a| < N} (2 pi i)^{-|a|}/a! partial^a_xi sigma . partial^a_x tau |
/// ```
pub fn composition_limit_study(
    sigma: &SeparableSymbol,
    tau: &SeparableSymbol,
    n_terms: u32,
    hbars: &[f64],
    points_per_axis: usize,
) -> RateTable {
    let dim = sigma.x_part.dim();
    assert_eq!(dim, tau.x_part.dim());
    let win = window(2 * dim, points_per_axis);
    let alphas: Vec<MultiIndex> = MultiIndex::all_up_to(dim, n_terms - 1);
    let errors = hbars
        .iter()
        .map(|&hbar| {
            win.iter()
                .map(|xxi| {
                    let (x, xi) = xxi.split_at(dim);
                    let mut lattice = Complex64::ZERO;
                    let mut euclid = Complex64::ZERO;
                    for alpha in &alphas {
                        let inv_fact = 1.0 / alpha.factorial();
                        // lattice: falling derivative on sigma's xi part,
                        // forward difference on tau's x part
                        lattice += sigma.x_part.eval(x)
                            * sigma.xi_part.falling_derivative(alpha, hbar, xi)
                            * tau.x_part.forward_difference(alpha, hbar, x)
                            * tau.xi_part.eval(xi)
                            * inv_fact;
                        euclid += sigma.x_part.eval(x)
                            * sigma.xi_part.partial(alpha, xi)
                            * tau.x_part.partial(alpha, x)
                            * tau.xi_part.eval(xi)
                            * inv_fact
                            / Complex64::new(0.0, TWO_PI).powu(alpha.order());
                    }
                    (lattice - euclid).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    RateTable::from_errors(hbars, errors)
}

/// The standard spacing ladder `2^-1 .. 2^-5`.
pub fn dyadic_hbars() -> Vec<f64> {
    dyadic_hbars_range(1, 5)
}

/// Spacings `2^-lo .. 2^-hi`.
pub fn dyadic_hbars_range(lo_pow: i32, hi_pow: i32) -> Vec<f64> {
    (lo_pow..=hi_pow).map(|p| 0.5f64.powi(p)).collect()
}
