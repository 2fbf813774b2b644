//! Finite periodic model of the scaled lattice and its dual torus grid.
//!
//! A model is a box of `M^n` lattice points `k = hbar*m` with integer
//! coordinates `m` in `{-M/2, ..., M/2-1}` per axis, together with the dual
//! grid `theta in {t/M : t = 0..M-1}^n` on the torus. On this model the
//! forward/inverse Fourier pair below is exactly unitary, torus integrals are
//! grid averages with weight `M^-n`, and all shifts wrap periodically.
//!
//! Storage convention: values are kept in DFT slot order, i.e. the flat slot
//! `j` per axis represents the integer coordinate `j` for `j < M/2` and
//! `j - M` otherwise. Since characters only see `m mod M`, plain FFTs apply
//! with no reshuffling; centered coordinates enter only through weights and
//! mode multipliers.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Finite periodic discretization of the scaled lattice with `M` points per
/// axis, spacing `hbar` and dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    n: usize,
    hbar: f64,
    m: usize,
}

impl LatticeModel {
    pub fn new(n: usize, hbar: f64, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("dimension n must be positive".into()));
        }
        if !(hbar > 0.0 && hbar <= 1.0) {
            return Err(Error::InvalidModel(format!(
                "hbar must lie in (0, 1], got {hbar}"
            )));
        }
        if m < 2 || !m.is_multiple_of(2) {
            return Err(Error::InvalidModel(format!(
                "points per axis must be even and >= 2, got {m}"
            )));
        }
        Ok(Self { n, hbar, m })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.m
    }

    /// Total number of box (equivalently grid) points `M^n`.
    pub fn size(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    /// Quadrature weight of one grid point, `M^-n`.
    pub fn grid_weight(&self) -> f64 {
        1.0 / self.size() as f64
    }

    /// Centered integer coordinate represented by a per-axis slot.
    #[inline]
    pub fn slot_to_int(&self, slot: usize) -> i64 {
        debug_assert!(slot < self.m);
        if slot < self.m / 2 {
            slot as i64
        } else {
            slot as i64 - self.m as i64
        }
    }

    /// Slot representing an arbitrary integer coordinate (periodic wrap).
    #[inline]
    pub fn int_to_slot(&self, value: i64) -> usize {
        value.rem_euclid(self.m as i64) as usize
    }

    /// Decompose a flat index into per-axis slots (row-major).
    pub fn slots(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.n];
        let mut rest = idx;
        for axis in (0..self.n).rev() {
            out[axis] = rest % self.m;
            rest /= self.m;
        }
        out
    }

    /// Flat index from per-axis slots.
    pub fn flat(&self, slots: &[usize]) -> usize {
        debug_assert_eq!(slots.len(), self.n);
        let mut idx = 0usize;
        for &s in slots {
            debug_assert!(s < self.m);
            idx = idx * self.m + s;
        }
        idx
    }

    /// Centered integer coordinates of a flat box index.
    pub fn int_coords(&self, idx: usize) -> Vec<i64> {
        self.slots(idx).iter().map(|&s| self.slot_to_int(s)).collect()
    }

    /// Physical lattice point `k = hbar * m`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.int_coords(idx).iter().map(|&c| self.hbar * c as f64).collect()
    }

    /// `|k| = hbar * sqrt(sum m_j^2)` of a flat box index.
    pub fn norm_k(&self, idx: usize) -> f64 {
        let s: i64 = self.int_coords(idx).iter().map(|&c| c * c).sum();
        self.hbar * (s as f64).sqrt()
    }

    /// Largest `|k|` on the box.
    pub fn box_radius(&self) -> f64 {
        let half = (self.m / 2) as f64;
        self.hbar * half * (self.n as f64).sqrt()
    }

    /// Torus grid point in `[0,1)^n` of a flat grid index.
    pub fn theta(&self, idx: usize) -> Vec<f64> {
        self.slots(idx)
            .iter()
            .map(|&t| t as f64 / self.m as f64)
            .collect()
    }

    /// Flat index shifted by `steps` lattice steps along `axis`, with wrap.
    pub fn shift(&self, idx: usize, axis: usize, steps: i64) -> usize {
        debug_assert!(axis < self.n);
        let mut slots = self.slots(idx);
        slots[axis] = self.int_to_slot(slots[axis] as i64 + steps);
        self.flat(&slots)
    }

    /// Flat index of the per-axis slot difference `a - b` (wrapped). Used for
    /// the kernel/convolution index arithmetic `K(k, m) = kappa(k, k - m)`.
    pub fn wrap_sub(&self, a: usize, b: usize) -> usize {
        let sa = self.slots(a);
        let sb = self.slots(b);
        let diff: Vec<usize> = sa
            .iter()
            .zip(&sb)
            .map(|(&x, &y)| self.int_to_slot(x as i64 - y as i64))
            .collect();
        self.flat(&diff)
    }

    /// Flat index of the negated point `-m` (wrapped). Grid reflection
    /// `theta -> -theta` uses the same map.
    pub fn wrap_neg(&self, idx: usize) -> usize {
        let slots: Vec<usize> = self
            .slots(idx)
            .iter()
            .map(|&s| self.int_to_slot(-(s as i64)))
            .collect();
        self.flat(&slots)
    }

    /// Periodic distance `|k - m|` between two box points, in physical units:
    /// per axis the slot difference is folded into `[-M/2, M/2]` before the
    /// Euclidean norm is taken and scaled by `hbar`.
    pub fn periodic_distance(&self, a: usize, b: usize) -> f64 {
        let sa = self.slots(a);
        let sb = self.slots(b);
        let mut acc = 0.0;
        for (&x, &y) in sa.iter().zip(&sb) {
            let raw = (x as i64 - y as i64).rem_euclid(self.m as i64);
            let folded = raw.min(self.m as i64 - raw) as f64;
            acc += folded * folded;
        }
        self.hbar * acc.sqrt()
    }

    /// `(1 + |k|)^s` weight of a flat box index.
    pub fn weight(&self, idx: usize, s: f64) -> f64 {
        (1.0 + self.norm_k(idx)).powf(s)
    }

    fn check_same(&self, other: &LatticeModel) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ModelMismatch)
        }
    }
}

/// Complex samples on the lattice box, indexed like the model.
#[derive(Debug, Clone)]
pub struct LatticeFunction {
    pub model: LatticeModel,
    pub values: Vec<Complex64>,
}

/// Complex samples on the dual torus grid, indexed like the model.
#[derive(Debug, Clone)]
pub struct TorusFunction {
    pub model: LatticeModel,
    pub values: Vec<Complex64>,
}

macro_rules! sampled_impl {
    ($ty:ident, $coord:ident) => {
        impl $ty {
            pub fn zero(model: &LatticeModel) -> Self {
                Self {
                    model: model.clone(),
                    values: vec![Complex64::ZERO; model.size()],
                }
            }

            pub fn from_values(model: &LatticeModel, values: Vec<Complex64>) -> Result<Self> {
                if values.len() != model.size() {
                    return Err(Error::InvalidModel(format!(
                        "expected {} samples, got {}",
                        model.size(),
                        values.len()
                    )));
                }
                Ok(Self { model: model.clone(), values })
            }

            /// Tabulate from a closure over the physical coordinate.
            pub fn from_fn(model: &LatticeModel, f: impl Fn(&[f64]) -> Complex64) -> Self {
                let values = (0..model.size()).map(|i| f(&model.$coord(i))).collect();
                Self { model: model.clone(), values }
            }

            pub fn l2_norm(&self) -> f64 {
                self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
            }

            pub fn scale(&self, c: Complex64) -> Self {
                Self {
                    model: self.model.clone(),
                    values: self.values.iter().map(|v| v * c).collect(),
                }
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.model.check_same(&other.model)?;
                Ok(Self {
                    model: self.model.clone(),
                    values: self
                        .values
                        .iter()
                        .zip(&other.values)
                        .map(|(a, b)| a + b)
                        .collect(),
                })
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.model.check_same(&other.model)?;
                Ok(Self {
                    model: self.model.clone(),
                    values: self
                        .values
                        .iter()
                        .zip(&other.values)
                        .map(|(a, b)| a - b)
                        .collect(),
                })
            }

            pub fn mul_pointwise(&self, other: &Self) -> Result<Self> {
                self.model.check_same(&other.model)?;
                Ok(Self {
                    model: self.model.clone(),
                    values: self
                        .values
                        .iter()
                        .zip(&other.values)
                        .map(|(a, b)| a * b)
                        .collect(),
                })
            }
        }
    };
}

sampled_impl!(LatticeFunction, point);
sampled_impl!(TorusFunction, theta);

impl LatticeFunction {
    /// Dirac delta at the origin `k = 0`.
    pub fn delta(model: &LatticeModel) -> Self {
        let mut f = Self::zero(model);
        f.values[0] = Complex64::ONE;
        f
    }

    /// Delta at the point with the given centered integer coordinates.
    pub fn delta_at(model: &LatticeModel, ints: &[i64]) -> Self {
        let slots: Vec<usize> = ints.iter().map(|&c| model.int_to_slot(c)).collect();
        let mut f = Self::zero(model);
        f.values[model.flat(&slots)] = Complex64::ONE;
        f
    }

    /// Shift by `steps` lattice steps along `axis` (periodic):
    /// `(shifted f)(k) = f(k + hbar * steps * v_axis)`.
    pub fn shifted(&self, axis: usize, steps: i64) -> Self {
        let model = &self.model;
        let values = (0..model.size())
            .map(|i| self.values[model.shift(i, axis, steps)])
            .collect();
        Self { model: model.clone(), values }
    }

    /// Weighted norm `(sum_k (1+|k|)^{sp} |f(k)|^p)^{1/p}`.
    pub fn weighted_lp_norm(&self, s: f64, p: f64) -> f64 {
        assert!(p >= 1.0, "exponent p must be >= 1");
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| self.model.weight(i, s * p) * v.norm().powf(p))
            .sum();
        sum.powf(1.0 / p)
    }

    /// Weighted `l^2` norm, the `p = 2` member of the family.
    pub fn weighted_l2_norm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| self.model.weight(i, 2.0 * s) * v.norm_sqr())
            .sum();
        sum.sqrt()
    }
}

impl TorusFunction {
    /// Norm induced by the grid quadrature, `(M^-n sum |F|^2)^{1/2}`.
    pub fn grid_l2_norm(&self) -> f64 {
        (self.model.grid_weight() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Grid average, the discrete torus integral.
    pub fn grid_mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.model.grid_weight()
    }

    /// Samples of the character `e^{2 pi i m0 . theta}` for integer `m0`.
    pub fn character(model: &LatticeModel, m0: &[i64]) -> Self {
        Self::from_fn(model, |theta| {
            let phase: f64 = m0.iter().zip(theta).map(|(&m, &t)| m as f64 * t).sum();
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
        })
    }
}

/// In-place unnormalized DFT along every axis of a row-major `M^n` array.
/// `forward` uses the `e^{-2 pi i j t / M}` sign.
pub(crate) fn fft_all_axes(model: &LatticeModel, data: &mut [Complex64], forward: bool) {
    let m = model.points();
    let n = model.dim();
    debug_assert_eq!(data.len(), model.size());
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(m)
    } else {
        planner.plan_fft_inverse(m)
    };
    let mut line = vec![Complex64::ZERO; m];
    for axis in 0..n {
        // Stride of one step along `axis` in the row-major layout.
        let stride = m.pow((n - 1 - axis) as u32);
        let lines = data.len() / m;
        for l in 0..lines {
            // Base offset of the l-th line along this axis.
            let block = l / stride;
            let offset = block * stride * m + (l % stride);
            for (j, v) in line.iter_mut().enumerate() {
                *v = data[offset + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[offset + j * stride] = *v;
            }
        }
    }
}

/// Semi-classical forward Fourier transform on the model:
/// `F(theta) = sum_m e^{-2 pi i m.theta} f(hbar m)` over the box.
pub fn forward_fourier(f: &LatticeFunction) -> TorusFunction {
    let mut values = f.values.clone();
    fft_all_axes(&f.model, &mut values, true);
    TorusFunction { model: f.model.clone(), values }
}

/// Inverse transform `f(hbar m) = M^-n sum_theta e^{2 pi i m.theta} F(theta)`.
pub fn inverse_fourier(big_f: &TorusFunction) -> LatticeFunction {
    let mut values = big_f.values.clone();
    fft_all_axes(&big_f.model, &mut values, false);
    let w = big_f.model.grid_weight();
    for v in &mut values {
        *v *= w;
    }
    LatticeFunction { model: big_f.model.clone(), values }
}

/// Mode coefficients of a grid function: `c_m` with
/// `g(theta) = sum_{m in I} c_m e^{2 pi i m.theta}`, in slot order.
pub(crate) fn grid_to_modes(g: &TorusFunction) -> Vec<Complex64> {
    let mut modes = g.values.clone();
    fft_all_axes(&g.model, &mut modes, true);
    let w = g.model.grid_weight();
    for v in &mut modes {
        *v *= w;
    }
    modes
}

/// Inverse of [`grid_to_modes`].
pub(crate) fn modes_to_grid(model: &LatticeModel, modes: &[Complex64]) -> TorusFunction {
    let mut values = modes.to_vec();
    fft_all_axes(model, &mut values, false);
    TorusFunction { model: model.clone(), values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, random_lattice_fn};

    #[test]
    fn model_rejects_bad_parameters() {
        assert!(LatticeModel::new(0, 0.5, 8).is_err());
        assert!(LatticeModel::new(1, 0.0, 8).is_err());
        assert!(LatticeModel::new(1, 1.5, 8).is_err());
        assert!(LatticeModel::new(1, 0.5, 7).is_err());
        assert!(LatticeModel::new(1, 0.5, 0).is_err());
        assert!(LatticeModel::new(2, 1.0, 8).is_ok());
    }

    #[test]
    fn centered_coordinates_and_norm() {
        let model = LatticeModel::new(2, 0.5, 4).unwrap();
        // slot 3 per axis is the integer -1
        let idx = model.flat(&[3, 3]);
        assert_eq!(model.int_coords(idx), vec![-1, -1]);
        assert_close(model.norm_k(idx), 0.5 * (2.0f64).sqrt(), 1e-15);
        assert_eq!(model.int_to_slot(-2), 2);
        assert_eq!(model.slot_to_int(2), -2);
    }

    #[test]
    fn shift_by_full_period_is_identity() {
        let model = LatticeModel::new(2, 1.0, 6).unwrap();
        for idx in 0..model.size() {
            assert_eq!(model.shift(idx, 0, 6), idx);
            assert_eq!(model.shift(idx, 1, -6), idx);
        }
    }

    #[test]
    fn delta_transforms_to_one() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        let f = LatticeFunction::delta(&model);
        let big_f = forward_fourier(&f);
        for v in &big_f.values {
            assert_close(v.re, 1.0, 1e-13);
            assert_close(v.im, 0.0, 1e-13);
        }
    }

    #[test]
    fn constant_inverts_to_delta() {
        let model = LatticeModel::new(1, 1.0, 8).unwrap();
        let big_f = TorusFunction::from_values(&model, vec![Complex64::ONE; 8]).unwrap();
        let f = inverse_fourier(&big_f);
        assert_close(f.values[0].re, 1.0, 1e-13);
        for v in &f.values[1..] {
            assert!(v.norm() < 1e-13);
        }
    }

    #[test]
    fn character_inverts_to_shifted_delta() {
        // F(theta) = e^{2 pi i m0.theta}  ->  delta at k = -hbar m0 (wrapped)
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let m0 = 3i64;
        let big_f = TorusFunction::character(&model, &[m0]);
        let f = inverse_fourier(&big_f);
        let expect = LatticeFunction::delta_at(&model, &[-m0]);
        for (a, b) in f.values.iter().zip(&expect.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_matches_direct_summation() {
        let model = LatticeModel::new(2, 0.5, 16).unwrap();
        let f = random_lattice_fn(&model, 7);
        let big_f = forward_fourier(&f);

        // Direct O(M^2n) oracle for the forward transform.
        for t_idx in (0..model.size()).step_by(37) {
            let theta = model.theta(t_idx);
            let mut acc = Complex64::ZERO;
            for j in 0..model.size() {
                let ints = model.int_coords(j);
                let phase: f64 = ints.iter().zip(&theta).map(|(&c, &t)| c as f64 * t).sum();
                acc += f.values[j]
                    * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
            }
            assert!((acc - big_f.values[t_idx]).norm() < 1e-12 * model.size() as f64);
        }

        let back = inverse_fourier(&big_f);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plancherel_norm_equality() {
        let model = LatticeModel::new(2, 0.25, 16).unwrap();
        let f = random_lattice_fn(&model, 11);
        let big_f = forward_fourier(&f);
        assert_close(f.l2_norm(), big_f.grid_l2_norm(), 1e-12 * f.l2_norm().max(1.0));
    }

    #[test]
    fn shift_modulation_duality() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        let f = random_lattice_fn(&model, 3);
        let shifted = f.shifted(1, 1);
        let lhs = forward_fourier(&shifted);
        let rhs = forward_fourier(&f);
        for t_idx in 0..model.size() {
            let theta = model.theta(t_idx);
            let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta[1]);
            assert!((lhs.values[t_idx] - phase * rhs.values[t_idx]).norm() < 1e-12);
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let d0 = LatticeFunction::delta(&model);
        assert_close(d0.weighted_l2_norm(0.0), 1.0, 1e-15);
        // delta at |k| = hbar, s = 1: single term (1+hbar)
        let d1 = LatticeFunction::delta_at(&model, &[1]);
        assert_close(d1.weighted_l2_norm(1.0), 1.0 + 0.5, 1e-14);
        // general p agrees with direct summation
        let f = random_lattice_fn(&model, 5);
        let p = 3.0;
        let s = -1.0;
        let direct: f64 = (0..model.size())
            .map(|i| model.weight(i, s * p) * f.values[i].norm().powf(p))
            .sum();
        assert_close(f.weighted_lp_norm(s, p), direct.powf(1.0 / p), 1e-12);
    }
}
