//! Difference operators on the box and derivative-type operators on the grid.
//!
//! Forward differences `(g(k + hbar v_j) - g(k)) / hbar` act on lattice
//! functions with periodic wrap; their Fourier multiplier on the model is
//! `hbar^{-|alpha|} (e^{2 pi i theta} - 1)^alpha`. Derivative-type operators
//! act spectrally on grid functions: on the mode `e^{2 pi i m.theta}` the
//! plain operator of order `beta_j` multiplies by `hbar^{beta_j} m^{beta_j}`
//! and the falling variant by `hbar^{beta_j} m (m-1) ... (m - beta_j + 1)`,
//! exact on band-limited grid data.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    forward_fourier, grid_to_modes, inverse_fourier, modes_to_grid, LatticeFunction,
    LatticeModel, TorusFunction,
};

/// Multi-index `alpha = (alpha_1, ..., alpha_n)` of nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// Unit multi-index along `axis` (0-based).
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut e = vec![0; n];
        e[axis] = 1;
        Self(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|alpha| = sum alpha_j`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `alpha! = prod alpha_j!`, computed in integer arithmetic.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (1..=a as u64).product::<u64>().max(1))
            .product::<u64>() as f64
    }

    /// All multi-indices of dimension `n` with `|alpha| = order`.
    pub fn all_of_order(n: usize, order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut current = vec![0u32; n];
        fn rec(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, axis: usize, left: u32) {
            if axis == current.len() - 1 {
                current[axis] = left;
                out.push(MultiIndex(current.clone()));
                return;
            }
            for v in 0..=left {
                current[axis] = v;
                rec(out, current, axis + 1, left - v);
            }
        }
        rec(&mut out, &mut current, 0, order);
        out
    }

    /// All multi-indices with `|alpha| <= max_order`, grouped by order.
    pub fn all_up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
        (0..=max_order)
            .flat_map(|o| Self::all_of_order(n, o))
            .collect()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Spectral action of the derivative-type operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeKind {
    /// `hbar^{|beta|} ((2 pi i)^{-1} d/dtheta)^beta`
    Plain,
    /// `hbar^{|beta|} prod_j prod_{l=0}^{beta_j - 1} ((2 pi i)^{-1} d/dtheta_j - l)`
    Falling,
}

/// Multiplicative factor applied to the mode with centered integer
/// coordinates `ints` by the derivative-type operator of index `beta`.
pub fn mode_factor(hbar: f64, beta: &MultiIndex, kind: DerivativeKind, ints: &[i64]) -> f64 {
    let mut factor = 1.0;
    for (axis, &b) in beta.0.iter().enumerate() {
        let m = ints[axis] as f64;
        let mut axis_factor = hbar.powi(b as i32);
        match kind {
            DerivativeKind::Plain => axis_factor *= m.powi(b as i32),
            DerivativeKind::Falling => {
                for l in 0..b {
                    axis_factor *= m - l as f64;
                }
            }
        }
        factor *= axis_factor;
    }
    factor
}

/// One forward difference along `axis`: `(g(k + hbar v_axis) - g(k)) / hbar`.
pub fn forward_difference_axis(f: &LatticeFunction, axis: usize) -> LatticeFunction {
    let inv_h = 1.0 / f.model.hbar();
    let shifted = f.shifted(axis, 1);
    let values = shifted
        .values
        .iter()
        .zip(&f.values)
        .map(|(a, b)| (a - b) * inv_h)
        .collect();
    LatticeFunction { model: f.model.clone(), values }
}

/// Composed forward difference of multi-order `alpha`, with periodic wrap.
pub fn forward_difference(f: &LatticeFunction, alpha: &MultiIndex) -> LatticeFunction {
    assert_eq!(alpha.dim(), f.model.dim(), "multi-index dimension mismatch");
    let mut g = f.clone();
    for (axis, &a) in alpha.0.iter().enumerate() {
        for _ in 0..a {
            g = forward_difference_axis(&g, axis);
        }
    }
    g
}

/// Fourier multiplier of the composed forward difference:
/// `hbar^{-|alpha|} prod_j (e^{2 pi i theta_j} - 1)^{alpha_j}` on the grid.
pub fn diff_multiplier(alpha: &MultiIndex, model: &LatticeModel) -> TorusFunction {
    assert_eq!(alpha.dim(), model.dim(), "multi-index dimension mismatch");
    let scale = model.hbar().powi(-(alpha.order() as i32));
    TorusFunction::from_fn(model, |theta| {
        let mut prod = Complex64::new(scale, 0.0);
        for (axis, &a) in alpha.0.iter().enumerate() {
            let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta[axis])
                - Complex64::ONE;
            prod *= e.powu(a);
        }
        prod
    })
}

/// Spectral path for the forward difference: inverse transform of
/// `diff_multiplier * forward_fourier(f)`. Equal to [`forward_difference`]
/// on the model up to roundoff; kept as the multiplier route.
pub fn forward_difference_spectral(f: &LatticeFunction, alpha: &MultiIndex) -> LatticeFunction {
    let mult = diff_multiplier(alpha, &f.model);
    let big_f = forward_fourier(f);
    inverse_fourier(&mult.mul_pointwise(&big_f).expect("same model")).clone()
}

/// Derivative-type operator on a grid function, implemented spectrally.
pub fn derivative_theta(
    g: &TorusFunction,
    beta: &MultiIndex,
    kind: DerivativeKind,
) -> TorusFunction {
    assert_eq!(beta.dim(), g.model.dim(), "multi-index dimension mismatch");
    let mut modes = grid_to_modes(g);
    let hbar = g.model.hbar();
    for (idx, c) in modes.iter_mut().enumerate() {
        let ints = g.model.int_coords(idx);
        *c *= mode_factor(hbar, beta, kind, &ints);
    }
    modes_to_grid(&g.model, &modes)
}

/// Generalized q-difference: `hbar^{-1} F^{-1}(q . F g)`, equivalently the
/// periodic convolution `hbar^{-1} (g * F^{-1} q)` on the model.
pub fn generalized_difference(q: &TorusFunction, g: &LatticeFunction) -> Result<LatticeFunction> {
    if q.model != g.model {
        return Err(Error::ModelMismatch);
    }
    let big_g = forward_fourier(g);
    let product = q.mul_pointwise(&big_g)?;
    let mut out = inverse_fourier(&product);
    let inv_h = 1.0 / g.model.hbar();
    for v in &mut out.values {
        *v *= inv_h;
    }
    Ok(out)
}

/// Result of the discrete torus Taylor expansion on a one-dimensional model.
#[derive(Debug, Clone)]
pub struct TaylorExpansion {
    /// Coefficients `c_j = f_j(0)` of the divisor powers, `j = 0..N-1`.
    pub coefficients: Vec<Complex64>,
    /// Remainder grid function `f_N`.
    pub remainder: TorusFunction,
    /// Grid indices (other than 0) where the divisor vanished and the
    /// derivative branch of the recursion was used.
    pub derivative_branch_points: Vec<usize>,
}

/// Divisor `e^{2 pi i theta / hbar} - 1` sampled on the grid.
pub fn taylor_divisor(model: &LatticeModel) -> TorusFunction {
    TorusFunction::from_fn(model, |theta| {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta[0] / model.hbar())
            - Complex64::ONE
    })
}

/// Discrete Taylor expansion of a one-dimensional grid function around 0:
/// computes `c_j = f_j(0)` by the recursion
/// `f_{j+1}(theta) = (f_j(theta) - f_j(0)) / (e^{2 pi i theta / hbar} - 1)`
/// off the divisor's zero set and the spectral derivative branch on it, and
/// returns the remainder `f_N`. The reconstruction
/// `f = sum_{j<N} c_j d^j + f_N d^N` with `d` the divisor holds at every
/// grid point where the quotient branch applied.
pub fn toroidal_taylor(f: &TorusFunction, n_terms: usize) -> Result<TaylorExpansion> {
    if f.model.dim() != 1 {
        return Err(Error::DimensionUnsupported { expected: 1, got: f.model.dim() });
    }
    assert!(n_terms > 0, "need at least one term");
    let model = &f.model;
    let divisor = taylor_divisor(model);
    let zero_tol = 1e-12;
    let singular: Vec<usize> = (0..model.size())
        .filter(|&t| divisor.values[t].norm() < zero_tol)
        .collect();
    let branch_points: Vec<usize> = singular.iter().copied().filter(|&t| t != 0).collect();

    let mut coefficients = Vec::with_capacity(n_terms);
    let mut current = f.clone();
    let beta = MultiIndex(vec![1]);
    for _ in 0..n_terms {
        let c = current.values[0];
        coefficients.push(c);
        let derivative = derivative_theta(&current, &beta, DerivativeKind::Plain);
        let mut next = TorusFunction::zero(model);
        for t in 0..model.size() {
            next.values[t] = if divisor.values[t].norm() < zero_tol {
                derivative.values[t]
            } else {
                (current.values[t] - c) / divisor.values[t]
            };
        }
        current = next;
    }

    Ok(TaylorExpansion {
        coefficients,
        remainder: current,
        derivative_branch_points: branch_points,
    })
}
