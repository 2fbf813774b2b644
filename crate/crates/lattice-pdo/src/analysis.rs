//! Norm identities and bounds: Hilbert-Schmidt, Young-type `l^p` bounds,
//! boundedness from seminorms, compactness indicator and Gohberg gap,
//! Schatten/trace identities, Garding constants and the lattice-torus
//! conjugation identity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diffops::{DerivativeKind, MultiIndex};
use crate::error::{Error, Result};
use crate::model::{fft_all_axes, LatticeFunction, LatticeModel};
use crate::quantize::{kernel, KernelMatrix};
use crate::symbol::Symbol;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Evaluate a symbol-dependent quantity on the base model and on the model
/// with doubled points per axis; the workhorse of every "stable under box
/// growth" report.
pub fn box_growth_scan<T>(
    base: &LatticeModel,
    build: impl Fn(&LatticeModel) -> Result<Symbol>,
    eval: impl Fn(&Symbol) -> Result<T>,
) -> Result<(T, T)> {
    let doubled = LatticeModel::new(base.dim(), base.hbar(), 2 * base.points())?;
    let small = eval(&build(base)?)?;
    let large = eval(&build(&doubled)?)?;
    Ok((small, large))
}

// ---------------------------------------------------------------------------
// Hilbert-Schmidt and Young bounds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct HsReport {
    pub symbol_norm: f64,
    pub frobenius_norm: f64,
    pub gap: f64,
}

/// The Hilbert-Schmidt identity: the `L^2(box x grid)` norm of the symbol
/// equals the Frobenius norm of its kernel, exactly on the model.
pub fn hs_norm_check(sigma: &Symbol) -> HsReport {
    let symbol_norm = sigma.l2_norm();
    let frobenius_norm = kernel(sigma).frobenius_norm();
    HsReport {
        symbol_norm,
        frobenius_norm,
        gap: (symbol_norm - frobenius_norm).abs(),
    }
}

/// Toroidal Fourier coefficients of the symbol in its grid variable:
/// `(F_T sigma)(k, m) = M^-n sum_theta e^{-2 pi i m.theta} sigma(k, theta)`,
/// returned as a box x box table indexed `[k][m]`.
fn theta_fourier_table(sigma: &Symbol) -> Vec<Complex64> {
    let model = sigma.model();
    let size = model.size();
    let weight = model.grid_weight();
    let mut out = vec![Complex64::ZERO; size * size];
    let mut row = vec![Complex64::ZERO; size];
    for k in 0..size {
        row.copy_from_slice(sigma.row(k));
        fft_all_axes(model, &mut row, true);
        for (m, v) in row.iter().enumerate() {
            out[k * size + m] = v * weight;
        }
    }
    out
}

/// Convolution profile `lambda(m) = max_k |(F_T sigma)(k, m)|`.
fn lambda_profile(sigma: &Symbol) -> Vec<f64> {
    let size = sigma.model().size();
    let table = theta_fourier_table(sigma);
    let mut lambda = vec![0.0f64; size];
    for k in 0..size {
        for m in 0..size {
            lambda[m] = lambda[m].max(table[k * size + m].norm());
        }
    }
    lambda
}

#[derive(Debug, Clone, Serialize)]
pub struct YoungReport {
    pub p: f64,
    /// `sum_m lambda(m)`, the Young convolution bound.
    pub predicted_bound: f64,
    /// Exact operator norm for p in {1, 2, inf}; probe maximum otherwise.
    pub empirical_norm: f64,
    pub empirical_is_exact: bool,
    pub dominated: bool,
}

/// Young-type `l^p` bound: the `l^1` norm of the profile `lambda` dominates
/// the operator norm on every `l^p`. For p = 1, 2 the empirical side is the
/// exact norm (column sums, SVD); otherwise probe vectors give a lower
/// bound.
pub fn lp_bound_young(sigma: &Symbol, p: f64) -> YoungReport {
    assert!(p >= 1.0, "exponent p must be >= 1");
    let lambda = lambda_profile(sigma);
    let predicted: f64 = lambda.iter().sum();
    let k = kernel(sigma);
    let (empirical, exact) = if p == 1.0 {
        (k.l1_operator_norm(), true)
    } else if p == 2.0 {
        (k.spectral_norm(), true)
    } else if p.is_infinite() {
        (k.linf_operator_norm(), true)
    } else {
        (probe_lp_norm(&k, p, 48), false)
    };
    YoungReport {
        p,
        predicted_bound: predicted,
        empirical_norm: empirical,
        empirical_is_exact: exact,
        dominated: empirical <= predicted + 1e-9,
    }
}

fn lp_norm(values: &[Complex64], p: f64) -> f64 {
    values.iter().map(|v| v.norm().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Lower bound for the `l^p -> l^p` norm from deterministic probe vectors:
/// deltas, constants and seeded random data.
fn probe_lp_norm(k: &KernelMatrix, p: f64, random_probes: usize) -> f64 {
    let model = k.model().clone();
    let size = model.size();
    let mut best = 0.0f64;
    let mut consider = |f: &LatticeFunction| {
        let denom = lp_norm(&f.values, p);
        if denom > 0.0 {
            let g = k.apply(f).expect("same model");
            best = best.max(lp_norm(&g.values, p) / denom);
        }
    };
    consider(&LatticeFunction::delta(&model));
    consider(&LatticeFunction::from_fn(&model, |_| Complex64::ONE));
    let mut rng = ChaCha8Rng::seed_from_u64(0x59u64);
    for _ in 0..random_probes {
        let values: Vec<Complex64> = (0..size)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        consider(&LatticeFunction::from_values(&model, values).unwrap());
    }
    best
}

// ---------------------------------------------------------------------------
// Boundedness from seminorms
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct L2BoundReport {
    /// Number of grid derivatives controlled, `floor(n/2) + 1`.
    pub kappa: u32,
    /// Largest sup-norm of `D^(alpha) sigma` over `|alpha| <= kappa`.
    pub derivative_bound: f64,
    pub spectral_norm: f64,
}

/// Sufficient-condition check for `l^2` boundedness: bounded grid
/// derivatives up to order `floor(n/2) + 1` against the measured spectral
/// norm. Stability under box growth is the caller's scan via
/// [`box_growth_scan`].
pub fn l2_bound_from_seminorms(sigma: &Symbol) -> L2BoundReport {
    let n = sigma.model().dim();
    let kappa = (n / 2) as u32 + 1;
    let mut bound = 0.0f64;
    for alpha in MultiIndex::all_up_to(n, kappa) {
        let d = sigma.theta_derivative(&alpha, DerivativeKind::Falling);
        bound = bound.max(d.table().iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    L2BoundReport {
        kappa,
        derivative_bound: bound,
        spectral_norm: kernel(sigma).spectral_norm(),
    }
}

// ---------------------------------------------------------------------------
// Compactness indicator and Gohberg gap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct DIndicator {
    /// `max |sigma|` over the outer shell `|k| >= fraction * box radius`.
    pub d_estimate: f64,
    pub fraction: f64,
    pub shell_radius: f64,
    pub box_radius: f64,
}

/// Finite-box proxy for the symbol limit superior at spatial infinity.
pub fn compactness_indicator(sigma: &Symbol, fraction: f64) -> DIndicator {
    assert!(fraction > 0.0 && fraction < 1.0, "fraction must lie in (0,1)");
    let model = sigma.model();
    let box_radius = model.box_radius();
    let shell_radius = fraction * box_radius;
    let mut d = 0.0f64;
    for k in 0..model.size() {
        if model.norm_k(k) >= shell_radius {
            for v in sigma.row(k) {
                d = d.max(v.norm());
            }
        }
    }
    DIndicator { d_estimate: d, fraction, shell_radius, box_radius }
}

#[derive(Debug, Clone, Serialize)]
pub struct GohbergRow {
    pub rank: usize,
    /// Spectral distance to the best approximation of this rank, `s_{r+1}`.
    pub distance: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GohbergReport {
    pub d_estimate: f64,
    pub tolerance: f64,
    pub rows: Vec<GohbergRow>,
    /// All requested ranks satisfy `distance >= d - tolerance`.
    pub consistent: bool,
}

/// Distance from `Op(sigma)` to low-rank (hence compact-like) operators via
/// singular values, checked against the box-proxy `d` indicator:
/// `s_{r+1} >= d - tol`. `trend_correction` feeds the observed decrease of
/// `d` across box growth into the tolerance.
pub fn gohberg_gap(
    sigma: &Symbol,
    ranks: &[usize],
    fraction: f64,
    trend_correction: f64,
) -> GohbergReport {
    let d = compactness_indicator(sigma, fraction).d_estimate;
    let tolerance = 1e-6 + trend_correction.max(0.0);
    let sv = kernel(sigma).singular_values();
    let rows: Vec<GohbergRow> = ranks
        .iter()
        .map(|&r| {
            let distance = sv.get(r).copied().unwrap_or(0.0);
            GohbergRow { rank: r, distance, margin: distance - (d - tolerance) }
        })
        .collect();
    let consistent = rows.iter().all(|row| row.margin >= 0.0);
    GohbergReport { d_estimate: d, tolerance, rows, consistent }
}

// ---------------------------------------------------------------------------
// Schatten classes and the trace identity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SchattenReport {
    pub p: f64,
    /// `sum_k ||sigma(k, .)||^p_{L^2(grid)}`, the membership bound.
    pub bound_lhs: f64,
    /// `(sum s_j^p)^{1/p}` from the singular values.
    pub schatten_norm: f64,
    /// Present only for p = 1: matrix trace, symbol-side trace, eigenvalue
    /// sum and their pairwise gaps.
    pub trace: Option<TraceIdentity>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceIdentity {
    pub matrix_trace: (f64, f64),
    pub symbol_trace: (f64, f64),
    pub eigenvalue_sum: (f64, f64),
    pub gap_matrix_symbol: f64,
    pub gap_matrix_eigen: f64,
}

fn c2pair(z: Complex64) -> (f64, f64) {
    (z.re, z.im)
}

/// Schatten membership bound and, for p = 1, the trace identity
/// `tr Op(sigma) = sum_k (grid average of sigma(k, .)) = sum_j lambda_j`.
pub fn schatten_report(sigma: &Symbol, p: f64) -> Result<SchattenReport> {
    assert!(p > 0.0 && p <= 2.0, "exponent outside (0, 2]");
    let model = sigma.model();
    let size = model.size();
    let bound_lhs: f64 = (0..size)
        .map(|k| {
            let row_norm =
                (model.grid_weight() * sigma.row(k).iter().map(|v| v.norm_sqr()).sum::<f64>())
                    .sqrt();
            row_norm.powf(p)
        })
        .sum();
    let k = kernel(sigma);
    let schatten_norm = k
        .singular_values()
        .iter()
        .map(|s| s.powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    let trace = if p == 1.0 {
        let matrix_trace = k.trace();
        let symbol_trace: Complex64 = (0..size).map(|kk| sigma.row_as_torus(kk).grid_mean()).sum();
        let eigenvalue_sum: Complex64 = k.eigenvalues()?.iter().sum();
        Some(TraceIdentity {
            matrix_trace: c2pair(matrix_trace),
            symbol_trace: c2pair(symbol_trace),
            eigenvalue_sum: c2pair(eigenvalue_sum),
            gap_matrix_symbol: (matrix_trace - symbol_trace).norm(),
            gap_matrix_eigen: (matrix_trace - eigenvalue_sum).norm(),
        })
    } else {
        None
    };
    Ok(SchattenReport { p, bound_lhs, schatten_norm, trace })
}

// ---------------------------------------------------------------------------
// Garding inequalities
// ---------------------------------------------------------------------------

/// Eigenvalues of the Hermitian part pencil `(H, W)` with `W` positive
/// diagonal, ascending.
fn pencil_eigenvalues(h: &DMatrix<Complex64>, w: &[f64]) -> Vec<f64> {
    let size = w.len();
    let mut b = h.clone();
    for r in 0..size {
        for c in 0..size {
            b[(r, c)] *= 1.0 / (w[r].sqrt() * w[c].sqrt());
        }
    }
    let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(b)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

fn hermitian_part(k: &KernelMatrix) -> DMatrix<Complex64> {
    let m = k.matrix();
    (m + m.adjoint()).scale(0.5)
}

fn min_hermitian_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

#[derive(Debug, Clone, Serialize)]
pub struct GardingReport {
    pub m: f64,
    pub c0: f64,
    pub c1: f64,
    /// Smallest eigenvalue of the weighted pencil, the certificate datum.
    pub pencil_min: f64,
    /// Smallest eigenvalue of `H - C0 W + C1 I` at the returned pair;
    /// nonnegative up to roundoff by construction.
    pub verification_min: f64,
    pub bisection_steps: u32,
}

/// Garding constants for the weighted form inequality
/// `Re(P g, g) >= C0 ||g||^2_{l^2_m} - C1 ||g||^2`.
///
/// With `H` the Hermitian part of the kernel and `W = diag((1+|k|)^{2m})`:
/// a positive-definite pencil returns the exact pair `(lambda_min, 0)`;
/// otherwise `C0` starts at half the median positive pencil eigenvalue with
/// `C1 = (C0 - lambda_min) max W`, and is halved until the full eigenbasis
/// verification `lambda_min(H - C0 W + C1 I) >= -tol` passes. The final
/// pair therefore certifies the inequality for every `g`, not just probe
/// vectors.
pub fn garding_constants(sigma: &Symbol, m: f64) -> Result<GardingReport> {
    let model = sigma.model();
    let size = model.size();
    let h = hermitian_part(&kernel(sigma));
    let w: Vec<f64> = (0..size).map(|k| model.weight(k, 2.0 * m)).collect();
    let w_max = w.iter().copied().fold(0.0, f64::max);
    let pencil = pencil_eigenvalues(&h, &w);
    let pencil_min = pencil[0];
    let scale = h.norm().max(1.0);
    let tol = 1e-10 * scale;

    if pencil_min > 0.0 {
        return Ok(GardingReport {
            m,
            c0: pencil_min,
            c1: 0.0,
            pencil_min,
            verification_min: 0.0,
            bisection_steps: 0,
        });
    }

    let positives: Vec<f64> = pencil.iter().copied().filter(|&x| x > 0.0).collect();
    if positives.is_empty() {
        return Err(Error::FormUnboundedBelow);
    }
    let mut c0 = 0.5 * positives[positives.len() / 2];
    let mut steps = 0u32;
    loop {
        let c1 = (c0 - pencil_min) * w_max;
        let mut shifted = h.clone();
        for r in 0..size {
            shifted[(r, r)] += Complex64::new(c1 - c0 * w[r], 0.0);
        }
        let vmin = min_hermitian_eigenvalue(&shifted);
        if vmin >= -tol {
            return Ok(GardingReport {
                m,
                c0,
                c1,
                pencil_min,
                verification_min: vmin,
                bisection_steps: steps,
            });
        }
        c0 *= 0.5;
        steps += 1;
        if steps > 60 {
            return Err(Error::FormUnboundedBelow);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpGardingReport {
    pub m: f64,
    /// Smallest `C >= 0` with `Re(P g, g) >= -C ||g||^2_{l^2_{(m-1)/2}}`.
    pub c: f64,
    pub pencil_min: f64,
}

/// Sharp Garding constant for a pointwise nonnegative symbol: the exact
/// value is `max(0, -lambda_min)` of the pencil against
/// `W = diag((1+|k|)^{m-1})`.
pub fn sharp_garding_check(sigma: &Symbol, m: f64) -> Result<SharpGardingReport> {
    let model = sigma.model();
    let size = model.size();
    for k in 0..size {
        for (t, v) in sigma.row(k).iter().enumerate() {
            if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) || v.re < -1e-12 {
                return Err(Error::NotPointwiseNonnegative {
                    box_idx: k,
                    grid_idx: t,
                    value: v.re,
                });
            }
        }
    }
    let h = hermitian_part(&kernel(sigma));
    let w: Vec<f64> = (0..size).map(|k| model.weight(k, m - 1.0)).collect();
    let pencil = pencil_eigenvalues(&h, &w);
    let pencil_min = pencil[0];
    let scale = h.norm().max(1.0);
    let c = if pencil_min >= -1e-10 * scale { 0.0 } else { -pencil_min };
    Ok(SharpGardingReport { m, c, pencil_min })
}

// ---------------------------------------------------------------------------
// Lattice-torus link
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct LinkReport {
    pub gap_frobenius: f64,
    pub gap_spectral: f64,
    pub matrix_size: usize,
}

/// Verify the conjugation identity between the lattice quantization of
/// `sigma` and the adjoint of the torus quantization of
/// `tau(theta, kbar) = conj(sigma(-hbar kbar, theta))`:
/// both sides are assembled as dense matrices and compared in norm.
pub fn link_check(sigma: &Symbol) -> LinkReport {
    let model = sigma.model();
    let size = model.size();
    let weight = model.grid_weight();

    // Torus-side operator in the grid basis:
    // [Op_T tau](t, t') = M^-n sum_j e^{2 pi i (t - t').m_j / M} tau(theta_t, m_j)
    // with tau(theta, m_j) = conj(sigma(-hbar m_j, theta)).
    let m = model.points();
    let roots: Vec<Complex64> = (0..m)
        .map(|p| Complex64::from_polar(1.0, TWO_PI * p as f64 / m as f64))
        .collect();
    let slot_table: Vec<Vec<usize>> = (0..size).map(|i| model.slots(i)).collect();
    let mut op_t = DMatrix::from_element(size, size, Complex64::ZERO);
    for t in 0..size {
        for tp in 0..size {
            let mut acc = Complex64::ZERO;
            for j in 0..size {
                let neg_j = model.wrap_neg(j);
                let tau = sigma.value(neg_j, t).conj();
                // phase (t - t') . j mod M per axis
                let phase: usize = slot_table[t]
                    .iter()
                    .zip(&slot_table[tp])
                    .zip(&slot_table[j])
                    .map(|((&a, &b), &c)| ((a + m - b) % m) * c % m)
                    .sum::<usize>()
                    % m;
                acc += roots[phase] * tau;
            }
            op_t[(t, tp)] = acc * weight;
        }
    }

    // Fourier matrix F[t, j] = e^{-2 pi i j.t / M} and its inverse.
    let mut f_mat = DMatrix::from_element(size, size, Complex64::ZERO);
    let mut f_inv = DMatrix::from_element(size, size, Complex64::ZERO);
    for t in 0..size {
        for j in 0..size {
            let phase: usize = slot_table[t]
                .iter()
                .zip(&slot_table[j])
                .map(|(&a, &b)| (a * b) % m)
                .sum::<usize>()
                % m;
            f_mat[(t, j)] = roots[phase].conj();
            f_inv[(j, t)] = roots[phase] * weight;
        }
    }

    let rhs = &f_inv * op_t.adjoint() * &f_mat;
    let lhs = kernel(sigma);
    let diff = lhs.matrix() - rhs;
    let gap_frobenius = diff.norm();
    let gap_spectral = KernelMatrix::from_matrix(model, diff)
        .expect("square")
        .spectral_norm();
    LinkReport { gap_frobenius, gap_spectral, matrix_size: size }
}

// ---------------------------------------------------------------------------
// Weighted bounds and l^p compactness probe
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct WeightedBoundReport {
    pub declared_order: f64,
    pub s: f64,
    /// Exact norm of `Op(sigma): l^2_s -> l^2_{s-r}` on the model.
    pub norm: f64,
}

/// Norm of the operator between weighted spaces, computed exactly as the
/// spectral norm of `W_{s-r} K W_s^{-1}`.
pub fn weighted_bound_check(sigma: &Symbol, s: f64) -> Result<WeightedBoundReport> {
    let class = sigma.class().ok_or(Error::MissingClassDeclaration)?;
    let r = class.mu;
    let model = sigma.model();
    let size = model.size();
    let mut mat = kernel(sigma).matrix().clone();
    for row in 0..size {
        let wr = model.weight(row, s - r);
        for col in 0..size {
            let wc = model.weight(col, -s);
            mat[(row, col)] *= wr * wc;
        }
    }
    let norm = KernelMatrix::from_matrix(model, mat)?.spectral_norm();
    Ok(WeightedBoundReport { declared_order: r, s, norm })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessProbeReport {
    /// `(shell radius, max omega on the shell)` profile of
    /// `omega(k) = sup_m |(F_T sigma)(k, m)| / lambda(m)`.
    pub omega_shells: Vec<(f64, f64)>,
    pub omega_at_edge: f64,
    pub omega_max: f64,
    pub decaying: bool,
    /// `(cutoff radius, ||Op(sigma) - Op(sigma restricted to |k| <= cutoff)||)`.
    pub tail_norms: Vec<(f64, f64)>,
}

/// Probe the compactness mechanism: the profile `omega` must decay toward
/// the box edge and the spatial truncation tails must vanish in operator
/// norm.
pub fn lp_compactness_probe(sigma: &Symbol) -> CompactnessProbeReport {
    let model = sigma.model();
    let size = model.size();
    let table = theta_fourier_table(sigma);
    let lambda = lambda_profile(sigma);

    let omega: Vec<f64> = (0..size)
        .map(|k| {
            (0..size)
                .filter(|&mm| lambda[mm] > 0.0)
                .map(|mm| table[k * size + mm].norm() / lambda[mm])
                .fold(0.0, f64::max)
        })
        .collect();

    let box_radius = model.box_radius();
    let shells = 4usize;
    let mut omega_shells = Vec::new();
    for s in 0..shells {
        let lo = box_radius * s as f64 / shells as f64;
        let hi = box_radius * (s + 1) as f64 / shells as f64;
        let mx = (0..size)
            .filter(|&k| {
                let r = model.norm_k(k);
                r >= lo && (r < hi || s == shells - 1)
            })
            .map(|k| omega[k])
            .fold(0.0, f64::max);
        omega_shells.push((hi, mx));
    }
    let omega_max = omega.iter().copied().fold(0.0, f64::max);
    let omega_at_edge = omega_shells.last().map(|&(_, v)| v).unwrap_or(0.0);
    let decaying = omega_max > 0.0 && omega_at_edge <= 0.5 * omega_max;

    let mut tail_norms = Vec::new();
    for frac in [0.25, 0.5, 0.75] {
        let cutoff = frac * box_radius;
        let truncated = Symbol::from_table(
            model,
            (0..size * size)
                .map(|idx| {
                    let k = idx / size;
                    if model.norm_k(k) <= cutoff {
                        sigma.table()[idx]
                    } else {
                        Complex64::ZERO
                    }
                })
                .collect(),
        )
        .expect("same shape");
        let tail = kernel(&sigma.sub(&truncated).expect("same model"))
            .spectral_norm();
        tail_norms.push((cutoff, tail));
    }

    CompactnessProbeReport {
        omega_shells,
        omega_at_edge,
        omega_max,
        decaying,
        tail_norms,
    }
}

/// Convenience: the quadratic form `Re (K f, f)` of a kernel.
pub fn re_quadratic_form(k: &KernelMatrix, f: &LatticeFunction) -> f64 {
    let x = DVector::from_column_slice(&f.values);
    let y = k.matrix() * &x;
    y.iter().zip(x.iter()).map(|(a, b)| (a * b.conj()).re).sum()
}
