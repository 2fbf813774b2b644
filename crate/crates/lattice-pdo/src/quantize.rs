//! Quantization of symbols, kernel matrices, symbol extraction and kernel
//! decay diagnostics.
//!
//! On the finite model the operator with symbol `sigma` acts as
//! `Op(sigma) f (k) = M^-n sum_theta e^{2 pi i m.theta} sigma(k, theta) F(theta)`
//! with `F` the forward transform of `f`. Its kernel is
//! `K(k, m) = kappa(k, k - m)`, `kappa(k, l) = M^-n sum_theta e^{2 pi i l.theta} sigma(k, theta)`,
//! a per-row inverse DFT; extraction inverts this row-by-row, so
//! quantization and extraction are mutually inverse bit-for-bit up to FFT
//! roundoff.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::diffops::{DerivativeKind, MultiIndex};
use crate::error::{Error, Result};
use crate::model::{fft_all_axes, forward_fourier, inverse_fourier, LatticeFunction, LatticeModel};
use crate::report::{fit_line, LineFit};
use crate::symbol::{Amplitude, Symbol, SymbolStructure};

/// Dense operator matrix on the box: `(Op f)(k) = sum_m K(k, m) f(m)`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    model: LatticeModel,
    mat: DMatrix<Complex64>,
}

impl KernelMatrix {
    pub fn from_matrix(model: &LatticeModel, mat: DMatrix<Complex64>) -> Result<Self> {
        let size = model.size();
        if mat.nrows() != size || mat.ncols() != size {
            return Err(Error::InvalidModel(format!(
                "kernel must be {size} x {size}, got {} x {}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { model: model.clone(), mat })
    }

    pub fn identity(model: &LatticeModel) -> Self {
        let size = model.size();
        Self { model: model.clone(), mat: DMatrix::identity(size, size) }
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    pub fn apply(&self, f: &LatticeFunction) -> Result<LatticeFunction> {
        if f.model != self.model {
            return Err(Error::ModelMismatch);
        }
        let x = nalgebra::DVector::from_column_slice(&f.values);
        let y = &self.mat * x;
        LatticeFunction::from_values(&self.model, y.iter().copied().collect())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::ModelMismatch);
        }
        Ok(Self { model: self.model.clone(), mat: &self.mat * &other.mat })
    }

    pub fn adjoint(&self) -> Self {
        Self { model: self.model.clone(), mat: self.mat.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { model: self.model.clone(), mat: self.mat.transpose() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::ModelMismatch);
        }
        Ok(Self { model: self.model.clone(), mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::ModelMismatch);
        }
        Ok(Self { model: self.model.clone(), mat: &self.mat - &other.mat })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { model: self.model.clone(), mat: &self.mat * c }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let svd = self.mat.clone().svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Eigenvalues of the (generally non-normal) kernel matrix.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let schur = nalgebra::linalg::Schur::try_new(self.mat.clone(), 1e-13, 0)
            .ok_or(Error::SingularMatrix)?;
        let eig = schur.eigenvalues().ok_or(Error::SingularMatrix)?;
        Ok(eig.iter().copied().collect())
    }

    /// Exact operator norm on `l^1`: largest column absolute sum.
    pub fn l1_operator_norm(&self) -> f64 {
        (0..self.mat.ncols())
            .map(|c| self.mat.column(c).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Exact operator norm on `l^inf`: largest row absolute sum.
    pub fn linf_operator_norm(&self) -> f64 {
        (0..self.mat.nrows())
            .map(|r| self.mat.row(r).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// CSV rows `(row, col, re, im)` for external inspection.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.mat.nrows() * self.mat.ncols() + 1);
        out.push("row,col,re,im".to_string());
        for r in 0..self.mat.nrows() {
            for c in 0..self.mat.ncols() {
                let v = self.mat[(r, c)];
                out.push(format!("{r},{c},{:.17e},{:.17e}", v.re, v.im));
            }
        }
        out
    }
}

/// Apply the operator with symbol `sigma` to a lattice function. Multiplier
/// symbols go through a single FFT pair; the general case evaluates the
/// quadrature row by row.
pub fn apply(sigma: &Symbol, f: &LatticeFunction) -> Result<LatticeFunction> {
    if sigma.model() != &f.model {
        return Err(Error::ModelMismatch);
    }
    let model = sigma.model();
    let big_f = forward_fourier(f);
    match sigma.structure() {
        SymbolStructure::ThetaOnly => {
            let row = sigma.row_as_torus(0);
            Ok(inverse_fourier(&row.mul_pointwise(&big_f)?))
        }
        _ => {
            let size = model.size();
            let m = model.points();
            let weight = model.grid_weight();
            // e^{2 pi i p / M} for p = 0..M-1
            let roots: Vec<Complex64> = (0..m)
                .map(|p| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * p as f64 / m as f64))
                .collect();
            let slot_table: Vec<Vec<usize>> = (0..size).map(|i| model.slots(i)).collect();
            let mut values = Vec::with_capacity(size);
            for k in 0..size {
                let row = sigma.row(k);
                let ks = &slot_table[k];
                let mut acc = Complex64::ZERO;
                for t in 0..size {
                    let ts = &slot_table[t];
                    let phase: usize = ks
                        .iter()
                        .zip(ts)
                        .map(|(&a, &b)| (a * b) % m)
                        .sum::<usize>()
                        % m;
                    acc += roots[phase] * row[t] * big_f.values[t];
                }
                values.push(acc * weight);
            }
            LatticeFunction::from_values(model, values)
        }
    }
}

/// Assemble the dense kernel `K(k, m) = kappa(k, k - m)` of `Op(sigma)`,
/// one inverse DFT per box row. The diagonal `K(k, k)` is the grid average
/// of `sigma(k, .)`.
pub fn kernel(sigma: &Symbol) -> KernelMatrix {
    let model = sigma.model();
    let size = model.size();
    let weight = model.grid_weight();
    let mut mat = DMatrix::from_element(size, size, Complex64::ZERO);
    let mut row = vec![Complex64::ZERO; size];
    for k in 0..size {
        row.copy_from_slice(sigma.row(k));
        fft_all_axes(model, &mut row, false);
        for v in &mut row {
            *v *= weight;
        }
        // row now holds kappa(k, l) indexed by l
        for mcol in 0..size {
            mat[(k, mcol)] = row[model.wrap_sub(k, mcol)];
        }
    }
    KernelMatrix { model: model.clone(), mat }
}

/// Recover the symbol of an arbitrary operator matrix by testing it on the
/// grid characters: `sigma(k, theta) = e^{-2 pi i m.theta} (T e_theta)(k)`,
/// one forward DFT per kernel row. Exact inverse of [`kernel`] on the model.
pub fn extract_symbol(t: &KernelMatrix) -> Symbol {
    let model = &t.model;
    let size = model.size();
    let mut table = vec![Complex64::ZERO; size * size];
    let mut row = vec![Complex64::ZERO; size];
    for k in 0..size {
        for (l, r) in row.iter_mut().enumerate() {
            *r = t.mat[(k, model.wrap_sub(k, l))];
        }
        fft_all_axes(model, &mut row, true);
        table[k * size..(k + 1) * size].copy_from_slice(&row);
    }
    Symbol::from_table(model, table).expect("table has symbol shape")
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelDecayReport {
    pub mu_used: f64,
    pub delta_used: f64,
    /// Per `Q = 0..=Q_max` the smallest constant `C_Q` with
    /// `|K(k,m)| <= C_Q (1+|k|)^{mu+2Q delta} (1 + |k-m|/hbar)^{-2Q}`.
    pub constants: Vec<(u32, f64)>,
    /// Least-squares slope of `log |K|` against `log(1 + |k-m|/hbar)` over
    /// nonzero entries; `None` when the kernel is diagonal.
    pub decay_exponent: Option<f64>,
    pub fit_r2: Option<f64>,
    /// All off-diagonal entries vanish.
    pub diagonal_only: bool,
    /// Entries vanish beyond `max_offdiag_distance`, strictly inside the box.
    pub compactly_supported: bool,
    pub max_offdiag_distance: f64,
    pub box_diameter: f64,
}

/// Measure the off-diagonal decay of the kernel of `sigma` and the best
/// constants in the kernel bound, using the periodic (wrapped) distance.
pub fn kernel_decay_report(sigma: &Symbol, q_max: u32) -> KernelDecayReport {
    assert!(q_max <= 4, "Q beyond 4 is not meaningful at these box sizes");
    let model = sigma.model();
    let size = model.size();
    let hbar = model.hbar();
    let (mu, delta) = sigma.class().map(|c| (c.mu, c.delta)).unwrap_or((0.0, 0.0));
    let k = kernel(sigma);

    let max_abs = (0..size)
        .flat_map(|r| (0..size).map(move |c| (r, c)))
        .map(|(r, c)| k.entry(r, c).norm())
        .fold(0.0, f64::max);
    let zero_floor = max_abs * 1e-14;

    let mut constants = vec![0.0f64; q_max as usize + 1];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut max_offdiag = 0.0f64;
    for r in 0..size {
        let kw = 1.0 + model.norm_k(r);
        for c in 0..size {
            let v = k.entry(r, c).norm();
            let dist = model.periodic_distance(r, c);
            for (qi, cq) in constants.iter_mut().enumerate() {
                let q = qi as f64;
                let bound = kw.powf(mu + 2.0 * q * delta) * (1.0 + dist / hbar).powf(-2.0 * q);
                *cq = cq.max(v / bound);
            }
            if v > zero_floor && r != c {
                xs.push((1.0 + dist / hbar).ln());
                ys.push(v.ln());
                max_offdiag = max_offdiag.max(dist);
            }
        }
    }

    let diagonal_only = xs.is_empty();
    let box_diameter = model.box_radius();
    let compactly_supported = !diagonal_only && max_offdiag < 0.45 * hbar * model.points() as f64;
    let fit: Option<LineFit> = if xs.len() >= 2 { Some(fit_line(&xs, &ys)) } else { None };

    KernelDecayReport {
        mu_used: mu,
        delta_used: delta,
        constants: constants
            .into_iter()
            .enumerate()
            .map(|(q, c)| (q as u32, c))
            .collect(),
        decay_exponent: fit.map(|f| f.slope),
        fit_r2: fit.map(|f| f.r2),
        diagonal_only,
        compactly_supported,
        max_offdiag_distance: max_offdiag,
        box_diameter,
    }
}

/// Kernel of an amplitude operator:
/// `K(k, l) = M^-n sum_theta e^{2 pi i (m_k - m_l).theta} a(k, l, theta)`.
pub fn amplitude_kernel(a: &Amplitude) -> KernelMatrix {
    let model = a.model();
    let size = model.size();
    let weight = model.grid_weight();
    let mut mat = DMatrix::from_element(size, size, Complex64::ZERO);
    let mut row = vec![Complex64::ZERO; size];
    for k in 0..size {
        for l in 0..size {
            for (t, v) in row.iter_mut().enumerate() {
                *v = a.value(k, l, t);
            }
            fft_all_axes(model, &mut row, false);
            mat[(k, l)] = row[model.wrap_sub(k, l)] * weight;
        }
    }
    KernelMatrix { model: model.clone(), mat }
}

/// Apply the amplitude operator directly.
pub fn apply_amplitude(a: &Amplitude, f: &LatticeFunction) -> Result<LatticeFunction> {
    if a.model() != &f.model {
        return Err(Error::ModelMismatch);
    }
    amplitude_kernel(a).apply(f)
}

/// Truncated reduction of an amplitude to a symbol:
/// `sum_{|alpha| < N} (1/alpha!) Delta^alpha_l D^(alpha)_theta a(k,l,theta) |_{l=k}`.
pub fn amplitude_to_symbol(a: &Amplitude, n_terms: u32) -> Symbol {
    assert!((1..=4).contains(&n_terms), "term count outside 1..=4");
    let model = a.model();
    let mut acc = Symbol::from_table(
        model,
        vec![Complex64::ZERO; model.size() * model.size()],
    )
    .expect("zero table");
    for alpha in MultiIndex::all_up_to(model.dim(), n_terms - 1) {
        let term = a
            .theta_derivative(&alpha, DerivativeKind::Falling)
            .l_difference(&alpha)
            .diagonal()
            .scale(Complex64::new(1.0 / alpha.factorial(), 0.0));
        acc = acc.add(&term).expect("same model");
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{example1, weight};
    use crate::testutil::{random_lattice_fn, random_symbol};

    #[test]
    fn identity_symbol_acts_as_identity() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        let sigma = Symbol::constant(&model, Complex64::ONE);
        let f = random_lattice_fn(&model, 1);
        let g = apply(&sigma, &f).unwrap();
        for (a, b) in g.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-12);
        }
        let k = kernel(&sigma);
        for r in 0..model.size() {
            for c in 0..model.size() {
                let expect = if r == c { Complex64::ONE } else { Complex64::ZERO };
                assert!((k.entry(r, c) - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn example1_applies_forward_difference_step() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = example1(&model, 1).unwrap();
        let f = random_lattice_fn(&model, 2);
        let g = apply(&sigma, &f).unwrap();
        let shifted = f.shifted(0, 1);
        for i in 0..model.size() {
            let expect = shifted.values[i] - f.values[i];
            assert!((g.values[i] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn weight_symbol_fixes_delta_at_origin() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let sigma = weight(&model, 2.0);
        let f = LatticeFunction::delta(&model);
        let g = apply(&sigma, &f).unwrap();
        for (a, b) in g.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn kernel_of_shift_multiplier_is_permutation() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let sigma = Symbol::from_theta_fn(&model, |theta| {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta[0])
        });
        let k = kernel(&sigma);
        for r in 0..model.size() {
            for c in 0..model.size() {
                // K(k, m) = 1 iff m = k + hbar v_j (slot arithmetic, wrapped)
                let expect = if model.shift(r, 0, 1) == c {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                assert!((k.entry(r, c) - expect).norm() < 1e-13, "({r},{c})");
            }
        }
    }

    #[test]
    fn kernel_diagonal_is_grid_average() {
        let model = LatticeModel::new(2, 0.5, 6).unwrap();
        let sigma = random_symbol(&model, 8);
        let k = kernel(&sigma);
        for r in 0..model.size() {
            let avg = sigma.row_as_torus(r).grid_mean();
            assert!((k.entry(r, r) - avg).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_agrees_with_kernel_matvec() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        let sigma = random_symbol(&model, 3);
        let f = random_lattice_fn(&model, 4);
        let via_apply = apply(&sigma, &f).unwrap();
        let via_kernel = kernel(&sigma).apply(&f).unwrap();
        for (a, b) in via_apply.values.iter().zip(&via_kernel.values) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn apply_is_linear() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = random_symbol(&model, 5);
        let f = random_lattice_fn(&model, 6);
        let g = random_lattice_fn(&model, 7);
        let a = Complex64::new(0.3, -1.2);
        let b = Complex64::new(-0.8, 0.1);
        let lhs = apply(&sigma, &f.scale(a).add(&g.scale(b)).unwrap()).unwrap();
        let rhs = apply(&sigma, &f)
            .unwrap()
            .scale(a)
            .add(&apply(&sigma, &g).unwrap().scale(b))
            .unwrap();
        for (x, y) in lhs.values.iter().zip(&rhs.values) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_tests_characters_pointwise() {
        // Op(sigma) e_theta = sigma(., theta) e_theta for every grid theta.
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let sigma = random_symbol(&model, 9);
        for t in 0..model.size() {
            let theta = model.theta(t);
            let e_theta = LatticeFunction::from_fn(&model, |k| {
                let phase: f64 = theta
                    .iter()
                    .zip(k)
                    .map(|(&th, &kj)| th * kj / model.hbar())
                    .sum();
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
            });
            let lhs = apply(&sigma, &e_theta).unwrap();
            for k in 0..model.size() {
                let rhs = sigma.value(k, t) * e_theta.values[k];
                assert!((lhs.values[k] - rhs).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn extract_inverts_kernel() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        let sigma = random_symbol(&model, 10);
        let recovered = extract_symbol(&kernel(&sigma));
        for (a, b) in recovered.table().iter().zip(sigma.table()) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn extract_inverts_kernel_in_three_dimensions() {
        let model = LatticeModel::new(3, 0.5, 4).unwrap();
        let sigma = random_symbol(&model, 14);
        let recovered = extract_symbol(&kernel(&sigma));
        for (a, b) in recovered.table().iter().zip(sigma.table()) {
            assert!((a - b).norm() < 1e-11);
        }
        let f = random_lattice_fn(&model, 15);
        let via_apply = apply(&sigma, &f).unwrap();
        let via_kernel = kernel(&sigma).apply(&f).unwrap();
        for (a, b) in via_apply.values.iter().zip(&via_kernel.values) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn extract_identity_and_shift() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let sigma = extract_symbol(&KernelMatrix::identity(&model));
        assert!(sigma.table().iter().all(|v| (v - Complex64::ONE).norm() < 1e-12));

        // shift by +hbar v_1: T f(k) = f(k + hbar v_1)
        let size = model.size();
        let mut mat = DMatrix::from_element(size, size, Complex64::ZERO);
        for r in 0..size {
            mat[(r, model.shift(r, 0, 1))] = Complex64::ONE;
        }
        let t = KernelMatrix::from_matrix(&model, mat).unwrap();
        let sigma = extract_symbol(&t);
        for tt in 0..size {
            let theta = model.theta(tt)[0];
            let expect = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta);
            for k in 0..size {
                assert!((sigma.value(k, tt) - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn band_limited_symbols_give_banded_kernels() {
        // sigma(theta) = 2 + cos(2 pi theta): exactly three nonzero
        // diagonals.
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = Symbol::from_theta_fn(&model, |theta| {
            Complex64::new(2.0 + (2.0 * std::f64::consts::PI * theta[0]).cos(), 0.0)
        });
        let k = kernel(&sigma);
        let mut nonzero_per_row = Vec::new();
        for r in 0..model.size() {
            let cnt = (0..model.size())
                .filter(|&c| k.entry(r, c).norm() > 1e-12)
                .count();
            nonzero_per_row.push(cnt);
        }
        assert!(nonzero_per_row.iter().all(|&c| c == 3));

        let report = kernel_decay_report(&sigma, 2);
        assert!(report.compactly_supported);
        assert!(!report.diagonal_only);
    }

    #[test]
    fn decay_report_flags_diagonal_kernel() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = Symbol::constant(&model, Complex64::ONE);
        let report = kernel_decay_report(&sigma, 2);
        assert!(report.diagonal_only);
        assert!(report.decay_exponent.is_none());
    }

    #[test]
    fn smooth_symbol_kernel_decays_fast() {
        // sigma(theta) = 1/(2 + cos 2 pi theta) is smooth but not
        // band-limited; measured decay should beat 2Q for Q = 1..3.
        let model = LatticeModel::new(1, 1.0, 64).unwrap();
        let sigma = Symbol::from_theta_fn(&model, |theta| {
            Complex64::new(1.0 / (2.0 + (2.0 * std::f64::consts::PI * theta[0]).cos()), 0.0)
        });
        let report = kernel_decay_report(&sigma, 3);
        let slope = report.decay_exponent.expect("off-diagonal mass exists");
        assert!(slope < -6.0, "measured decay exponent {slope}");
    }

    #[test]
    fn l_independent_amplitude_reduces_to_symbol() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let sigma = random_symbol(&model, 11);
        let a = Amplitude::from_fn(&model, |k, _l, theta| {
            // re-evaluate sigma at (k, theta) through its table
            let ki = model.flat(
                &k.iter()
                    .map(|&x| model.int_to_slot((x / model.hbar()).round() as i64))
                    .collect::<Vec<_>>(),
            );
            let ti = model.flat(
                &theta
                    .iter()
                    .map(|&t| ((t * model.points() as f64).round() as usize) % model.points())
                    .collect::<Vec<_>>(),
            );
            sigma.value(ki, ti)
        })
        .unwrap();
        let f = random_lattice_fn(&model, 12);
        let via_amp = apply_amplitude(&a, &f).unwrap();
        let via_sym = apply(&sigma, &f).unwrap();
        for (x, y) in via_amp.values.iter().zip(&via_sym.values) {
            assert!((x - y).norm() < 1e-11);
        }
        // N = 1 reduction is already exact for l-independent amplitudes
        let reduced = amplitude_to_symbol(&a, 1);
        for (x, y) in reduced.table().iter().zip(sigma.table()) {
            assert!((x - y).norm() < 1e-11);
        }
    }

    #[test]
    fn constant_amplitude_is_identity() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let a = Amplitude::from_fn(&model, |_, _, _| Complex64::ONE).unwrap();
        let f = random_lattice_fn(&model, 13);
        let g = apply_amplitude(&a, &f).unwrap();
        for (x, y) in g.values.iter().zip(&f.values) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugate_lift_amplitude_realizes_the_adjoint() {
        // a(k, l, theta) = conj(sigma(l, theta)) applies the adjoint of
        // Op(sigma); the matrix conjugate transpose is the oracle.
        let model = LatticeModel::new(1, 0.5, 12).unwrap();
        let sigma = random_symbol(&model, 21);
        let a = Amplitude::from_symbol_in_l(&sigma.conj()).unwrap();
        let f = random_lattice_fn(&model, 22);
        let via_amp = apply_amplitude(&a, &f).unwrap();
        let adjoint_oracle = KernelMatrix {
            model: model.clone(),
            mat: kernel(&sigma).matrix().adjoint(),
        };
        let via_matrix = adjoint_oracle.apply(&f).unwrap();
        for (x, y) in via_amp.values.iter().zip(&via_matrix.values) {
            assert!((x - y).norm() < 1e-11);
        }
    }

    #[test]
    fn conjugate_lift_reduction_approaches_the_adjoint_symbol() {
        // With k-dependent sigma the reduced symbol must approach the
        // adjoint at operator level as terms are added.
        let model = LatticeModel::new(1, 0.25, 12).unwrap();
        let sigma = Symbol::from_fn(&model, |k, t| {
            Complex64::from_polar(
                1.0 / (1.0 + k[0] * k[0]),
                2.0 * std::f64::consts::PI * t[0],
            )
        });
        let a = Amplitude::from_symbol_in_l(&sigma.conj()).unwrap();
        let oracle = kernel(&sigma).adjoint();
        let mut prev = f64::INFINITY;
        for n in 1..=3 {
            let reduced = amplitude_to_symbol(&a, n);
            let gap = kernel(&reduced).sub(&oracle).unwrap().frobenius_norm();
            assert!(gap < prev, "N = {n}: {gap} vs {prev}");
            prev = gap;
        }
    }

    #[test]
    fn amplitude_reduction_converges_to_extracted_symbol() {
        // a(k, l, theta) = b(l) smooth: the N-term reduction approaches the
        // exact symbol extracted from the amplitude kernel.
        let model = LatticeModel::new(1, 0.25, 16).unwrap();
        let a = Amplitude::from_fn(&model, |_k, l, _theta| {
            Complex64::new(1.0 / (1.0 + l[0] * l[0]), 0.0)
        })
        .unwrap();
        let exact = extract_symbol(&amplitude_kernel(&a));
        let mut prev = f64::INFINITY;
        for n in 1..=3 {
            let approx = amplitude_to_symbol(&a, n);
            let gap = kernel(&approx.sub(&exact).unwrap()).frobenius_norm();
            assert!(gap < prev + 1e-12, "N = {n}: {gap} vs {prev}");
            prev = gap;
        }
    }
}
