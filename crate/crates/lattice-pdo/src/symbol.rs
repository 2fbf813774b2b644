//! Symbols, amplitudes, class seminorms, ellipticity certificates,
//! asymptotic partial sums and the built-in example symbols.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::diffops::{mode_factor, DerivativeKind, MultiIndex};
use crate::dsl::{self, Bindings, SymbolExpr};
use crate::error::{Error, Result};
use crate::model::{fft_all_axes, LatticeModel, TorusFunction};

/// Largest amplitude table (entries) the crate will allocate; `M^{3n}`
/// beyond this fails with a budget error instead of thrashing.
pub const AMPLITUDE_BUDGET: usize = 1 << 22;

/// Declared symbol class parameters: order and type exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolClass {
    pub mu: f64,
    pub rho: f64,
    pub delta: f64,
}

/// Structural shape of a symbol table, used for fast paths and solver
/// preconditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymbolStructure {
    General,
    /// Constant in `k`: a Fourier multiplier.
    ThetaOnly,
    /// Constant in `theta`: a multiplication operator on the box.
    KOnly,
}

/// A symbol `sigma(k, theta)` tabulated over box x grid.
#[derive(Debug, Clone)]
pub struct Symbol {
    model: LatticeModel,
    /// Row-major `[box index][grid index]`.
    table: Vec<Complex64>,
    structure: SymbolStructure,
    class: Option<SymbolClass>,
}

impl Symbol {
    pub fn from_table(model: &LatticeModel, table: Vec<Complex64>) -> Result<Self> {
        Self::from_table_with_structure(model, table, SymbolStructure::General)
    }

    pub fn from_table_with_structure(
        model: &LatticeModel,
        table: Vec<Complex64>,
        structure: SymbolStructure,
    ) -> Result<Self> {
        let size = model.size();
        if table.len() != size * size {
            return Err(Error::InvalidModel(format!(
                "symbol table needs {} entries, got {}",
                size * size,
                table.len()
            )));
        }
        Ok(Self { model: model.clone(), table, structure, class: None })
    }

    /// Tabulate from a closure over physical coordinates `(k, theta)`.
    pub fn from_fn(model: &LatticeModel, f: impl Fn(&[f64], &[f64]) -> Complex64) -> Self {
        let size = model.size();
        let thetas: Vec<Vec<f64>> = (0..size).map(|t| model.theta(t)).collect();
        let mut table = Vec::with_capacity(size * size);
        for k in 0..size {
            let kp = model.point(k);
            for theta in &thetas {
                table.push(f(&kp, theta));
            }
        }
        Self {
            model: model.clone(),
            table,
            structure: SymbolStructure::General,
            class: None,
        }
    }

    /// Multiplier symbol `sigma(theta)`, constant in `k`.
    pub fn from_theta_fn(model: &LatticeModel, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut s = Self::from_fn(model, |_, theta| f(theta));
        s.structure = SymbolStructure::ThetaOnly;
        s
    }

    /// Multiplication symbol `sigma(k)`, constant in `theta`.
    pub fn from_k_fn(model: &LatticeModel, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut s = Self::from_fn(model, |k, _| f(k));
        s.structure = SymbolStructure::KOnly;
        s
    }

    pub fn constant(model: &LatticeModel, c: Complex64) -> Self {
        let mut s = Self::from_fn(model, |_, _| c);
        s.structure = SymbolStructure::ThetaOnly;
        s
    }

    /// Tabulate a parsed expression; structure is inferred from the
    /// variables it uses.
    pub fn from_expr(
        model: &LatticeModel,
        expr: &SymbolExpr,
        params: &HashMap<String, Complex64>,
    ) -> Result<Self> {
        match dsl::tabulate(expr, model, dsl::TabulateKind::Symbol, params)? {
            dsl::Tabulated::Symbol(s) => Ok(s),
            _ => unreachable!("symbol tabulation returned a different kind"),
        }
    }

    pub fn with_class(mut self, mu: f64, rho: f64, delta: f64) -> Self {
        self.class = Some(SymbolClass { mu, rho, delta });
        self
    }

    pub fn with_structure(mut self, structure: SymbolStructure) -> Self {
        self.structure = structure;
        self
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn table(&self) -> &[Complex64] {
        &self.table
    }

    pub fn class(&self) -> Option<SymbolClass> {
        self.class
    }

    pub fn structure(&self) -> SymbolStructure {
        self.structure
    }

    #[inline]
    pub fn value(&self, box_idx: usize, grid_idx: usize) -> Complex64 {
        self.table[box_idx * self.model.size() + grid_idx]
    }

    pub fn row(&self, box_idx: usize) -> &[Complex64] {
        let size = self.model.size();
        &self.table[box_idx * size..(box_idx + 1) * size]
    }

    pub fn row_as_torus(&self, box_idx: usize) -> TorusFunction {
        TorusFunction::from_values(&self.model, self.row(box_idx).to_vec())
            .expect("row has grid length")
    }

    pub fn max_abs(&self) -> f64 {
        self.table.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `L^2(box x grid)` norm with grid weight: the symbol side of the
    /// Hilbert-Schmidt identity.
    pub fn l2_norm(&self) -> f64 {
        (self.model.grid_weight() * self.table.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::ModelMismatch);
        }
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let structure = if self.structure == other.structure {
            self.structure
        } else {
            SymbolStructure::General
        };
        Ok(Self { model: self.model.clone(), table, structure, class: None })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul_pointwise(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            model: self.model.clone(),
            table: self.table.iter().map(|v| v * c).collect(),
            structure: self.structure,
            class: self.class,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            model: self.model.clone(),
            table: self.table.iter().map(|v| v.conj()).collect(),
            structure: self.structure,
            class: self.class,
        }
    }

    /// `sigma(k, -theta)`; the grid reflection is exact.
    pub fn reflect_theta(&self) -> Self {
        let size = self.model.size();
        let mut table = vec![Complex64::ZERO; size * size];
        for k in 0..size {
            for t in 0..size {
                table[k * size + self.model.wrap_neg(t)] = self.table[k * size + t];
            }
        }
        Self {
            model: self.model.clone(),
            table,
            structure: self.structure,
            class: self.class,
        }
    }

    /// Pointwise reciprocal; fails on any grid value below `floor`.
    pub fn reciprocal(&self, floor: f64) -> Result<Self> {
        let size = self.model.size();
        let mut table = Vec::with_capacity(self.table.len());
        for (idx, v) in self.table.iter().enumerate() {
            if v.norm() < floor {
                return Err(Error::SymbolVanishesOnGrid {
                    box_idx: idx / size,
                    grid_idx: idx % size,
                    magnitude: v.norm(),
                });
            }
            table.push(v.inv());
        }
        Ok(Self {
            model: self.model.clone(),
            table,
            structure: self.structure,
            class: None,
        })
    }

    /// Forward difference of multi-order `alpha` in the lattice variable,
    /// with periodic wrap, applied per grid column.
    pub fn k_difference(&self, alpha: &MultiIndex) -> Self {
        assert_eq!(alpha.dim(), self.model.dim());
        let size = self.model.size();
        let inv_h = 1.0 / self.model.hbar();
        let mut table = self.table.clone();
        for (axis, &a) in alpha.0.iter().enumerate() {
            for _ in 0..a {
                let mut next = vec![Complex64::ZERO; table.len()];
                for k in 0..size {
                    let ks = self.model.shift(k, axis, 1);
                    for t in 0..size {
                        next[k * size + t] = (table[ks * size + t] - table[k * size + t]) * inv_h;
                    }
                }
                table = next;
            }
        }
        Self {
            model: self.model.clone(),
            table,
            structure: SymbolStructure::General,
            class: None,
        }
    }

    /// Derivative-type operator of multi-order `beta` in the grid variable,
    /// applied spectrally per box row.
    pub fn theta_derivative(&self, beta: &MultiIndex, kind: DerivativeKind) -> Self {
        assert_eq!(beta.dim(), self.model.dim());
        let size = self.model.size();
        let weight = self.model.grid_weight();
        let hbar = self.model.hbar();
        let factors: Vec<f64> = (0..size)
            .map(|idx| mode_factor(hbar, beta, kind, &self.model.int_coords(idx)))
            .collect();
        let mut table = self.table.clone();
        let mut row = vec![Complex64::ZERO; size];
        for k in 0..size {
            row.copy_from_slice(&table[k * size..(k + 1) * size]);
            fft_all_axes(&self.model, &mut row, true);
            for (c, &f) in row.iter_mut().zip(&factors) {
                *c *= f * weight;
            }
            fft_all_axes(&self.model, &mut row, false);
            table[k * size..(k + 1) * size].copy_from_slice(&row);
        }
        Self {
            model: self.model.clone(),
            table,
            structure: self.structure,
            class: None,
        }
    }
}

/// An amplitude `a(k, l, theta)` tabulated over box x box x grid.
#[derive(Debug, Clone)]
pub struct Amplitude {
    model: LatticeModel,
    /// Row-major `[k index][l index][grid index]`.
    table: Vec<Complex64>,
    /// Declared orders `(mu1, mu2)` in the two lattice variables.
    orders: Option<(f64, f64)>,
}

impl Amplitude {
    fn check_budget(model: &LatticeModel) -> Result<usize> {
        let size = model.size();
        let needed = size * size * size;
        if needed > AMPLITUDE_BUDGET {
            return Err(Error::MemoryBudgetExceeded { needed, budget: AMPLITUDE_BUDGET });
        }
        Ok(size)
    }

    pub fn from_table(model: &LatticeModel, table: Vec<Complex64>) -> Result<Self> {
        let size = Self::check_budget(model)?;
        if table.len() != size * size * size {
            return Err(Error::InvalidModel(format!(
                "amplitude table needs {} entries, got {}",
                size * size * size,
                table.len()
            )));
        }
        Ok(Self { model: model.clone(), table, orders: None })
    }

    pub fn from_fn(
        model: &LatticeModel,
        f: impl Fn(&[f64], &[f64], &[f64]) -> Complex64,
    ) -> Result<Self> {
        let size = Self::check_budget(model)?;
        let thetas: Vec<Vec<f64>> = (0..size).map(|t| model.theta(t)).collect();
        let points: Vec<Vec<f64>> = (0..size).map(|j| model.point(j)).collect();
        let mut table = Vec::with_capacity(size * size * size);
        for kp in &points {
            for lp in &points {
                for theta in &thetas {
                    table.push(f(kp, lp, theta));
                }
            }
        }
        Ok(Self { model: model.clone(), table, orders: None })
    }

    /// Amplitude `a(k, l, theta) = sigma(l, theta)`, the second-slot lift.
    pub fn from_symbol_in_l(sigma: &Symbol) -> Result<Self> {
        let model = sigma.model().clone();
        let size = Self::check_budget(&model)?;
        let mut table = Vec::with_capacity(size * size * size);
        for _ in 0..size {
            table.extend_from_slice(sigma.table());
        }
        let orders = sigma.class().map(|c| (0.0, c.mu));
        Ok(Self { model, table, orders })
    }

    pub fn with_orders(mut self, mu1: f64, mu2: f64) -> Self {
        self.orders = Some((mu1, mu2));
        self
    }

    pub fn orders(&self) -> Option<(f64, f64)> {
        self.orders
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    #[inline]
    pub fn value(&self, k: usize, l: usize, t: usize) -> Complex64 {
        let size = self.model.size();
        self.table[(k * size + l) * size + t]
    }

    /// Derivative-type operator in `theta`, spectrally per `(k, l)` row.
    pub fn theta_derivative(&self, beta: &MultiIndex, kind: DerivativeKind) -> Self {
        let size = self.model.size();
        let weight = self.model.grid_weight();
        let hbar = self.model.hbar();
        let factors: Vec<f64> = (0..size)
            .map(|idx| mode_factor(hbar, beta, kind, &self.model.int_coords(idx)))
            .collect();
        let mut table = self.table.clone();
        let mut row = vec![Complex64::ZERO; size];
        for r in 0..size * size {
            row.copy_from_slice(&table[r * size..(r + 1) * size]);
            fft_all_axes(&self.model, &mut row, true);
            for (c, &f) in row.iter_mut().zip(&factors) {
                *c *= f * weight;
            }
            fft_all_axes(&self.model, &mut row, false);
            table[r * size..(r + 1) * size].copy_from_slice(&row);
        }
        Self { model: self.model.clone(), table, orders: self.orders }
    }

    /// Forward difference of multi-order `alpha` in the second lattice
    /// variable `l`, with periodic wrap.
    pub fn l_difference(&self, alpha: &MultiIndex) -> Self {
        let size = self.model.size();
        let inv_h = 1.0 / self.model.hbar();
        let mut table = self.table.clone();
        for (axis, &a) in alpha.0.iter().enumerate() {
            for _ in 0..a {
                let mut next = vec![Complex64::ZERO; table.len()];
                for k in 0..size {
                    for l in 0..size {
                        let ls = self.model.shift(l, axis, 1);
                        for t in 0..size {
                            next[(k * size + l) * size + t] = (table[(k * size + ls) * size + t]
                                - table[(k * size + l) * size + t])
                                * inv_h;
                        }
                    }
                }
                table = next;
            }
        }
        Self { model: self.model.clone(), table, orders: None }
    }

    /// Restriction to the diagonal `l = k`, producing a symbol.
    pub fn diagonal(&self) -> Symbol {
        let size = self.model.size();
        let mut table = Vec::with_capacity(size * size);
        for k in 0..size {
            for t in 0..size {
                table.push(self.value(k, k, t));
            }
        }
        Symbol::from_table(&self.model, table).expect("diagonal has symbol shape")
    }
}

// ---------------------------------------------------------------------------
// Seminorms and ellipticity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SeminormEntry {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    /// Measured `max |D^(beta) Delta^alpha sigma| (1+|k|)^{-(mu - rho|alpha| + delta|beta|)}`.
    pub constant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeminormReport {
    pub mu: f64,
    pub rho: f64,
    pub delta: f64,
    pub max_alpha: u32,
    pub max_beta: u32,
    pub points_per_axis: usize,
    pub entries: Vec<SeminormEntry>,
}

impl SeminormReport {
    pub fn constant(&self, alpha: &[u32], beta: &[u32]) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.alpha == alpha && e.beta == beta)
            .map(|e| e.constant)
    }

    pub fn largest(&self) -> f64 {
        self.entries.iter().map(|e| e.constant).fold(0.0, f64::max)
    }
}

/// Measure the class constants of a declared symbol: for every
/// `|alpha| <= max_alpha`, `|beta| <= max_beta` the smallest constant making
/// the class inequality hold on the sampled box x grid.
pub fn seminorm_estimate(sigma: &Symbol, max_alpha: u32, max_beta: u32) -> Result<SeminormReport> {
    let class = sigma.class().ok_or(Error::MissingClassDeclaration)?;
    let model = sigma.model();
    let n = model.dim();
    let size = model.size();
    let mut entries = Vec::new();
    for alpha in MultiIndex::all_up_to(n, max_alpha) {
        let diffed = sigma.k_difference(&alpha);
        for beta in MultiIndex::all_up_to(n, max_beta) {
            let table = diffed.theta_derivative(&beta, DerivativeKind::Falling);
            let exponent =
                class.mu - class.rho * alpha.order() as f64 + class.delta * beta.order() as f64;
            let mut constant = 0.0f64;
            for k in 0..size {
                let w = model.weight(k, -exponent);
                for t in 0..size {
                    constant = constant.max(table.value(k, t).norm() * w);
                }
            }
            entries.push(SeminormEntry {
                alpha: alpha.0.clone(),
                beta: beta.0.clone(),
                constant,
            });
        }
    }
    Ok(SeminormReport {
        mu: class.mu,
        rho: class.rho,
        delta: class.delta,
        max_alpha,
        max_beta,
        points_per_axis: model.points(),
        entries,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub elliptic: bool,
    /// Largest constant valid on the certified shell.
    pub certificate_c: f64,
    /// Smallest certified shell radius.
    pub radius_m0: f64,
    pub order_mu: f64,
    pub box_radius: f64,
    pub points_per_axis: usize,
}

/// Search the sampled shells `|k| >= r` for the ellipticity certificate
/// `|sigma(k, theta)| >= C (1+|k|)^mu`. For each candidate radius the
/// largest valid constant is the shell minimum of `|sigma| (1+|k|)^{-mu}`;
/// the report keeps the smallest radius with a positive constant. A
/// certificate holding only on the outermost shell is rejected as a
/// truncation artifact, and values at roundoff level relative to the
/// symbol's scale count as vanishing.
pub fn ellipticity_check(sigma: &Symbol, mu: f64) -> EllipticityReport {
    let model = sigma.model();
    let size = model.size();
    let mut radii: Vec<f64> = (0..size).map(|k| model.norm_k(k)).collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let r_max = *radii.last().unwrap();
    let zero_floor = 1e-13 * sigma.max_abs();

    // Shell minimum of |sigma| (1+|k|)^{-mu}, for shells |k| >= r scanned
    // from the outside in.
    let mut per_point: Vec<(f64, f64)> = (0..size)
        .map(|k| {
            let w = model.weight(k, -mu);
            let mut row_min =
                sigma.row(k).iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
            if row_min < zero_floor {
                row_min = 0.0;
            }
            (model.norm_k(k), row_min * w)
        })
        .collect();
    per_point.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut best: Option<(f64, f64)> = None; // (radius, constant)
    let mut suffix_min = f64::INFINITY;
    let mut point_cursor = per_point.len();
    for &r in radii.iter().rev() {
        while point_cursor > 0 && per_point[point_cursor - 1].0 >= r - 1e-12 {
            suffix_min = suffix_min.min(per_point[point_cursor - 1].1);
            point_cursor -= 1;
        }
        if suffix_min > 0.0 && r < r_max - 1e-12 {
            best = Some((r, suffix_min));
        }
    }

    match best {
        Some((radius, c)) => EllipticityReport {
            elliptic: true,
            certificate_c: c,
            radius_m0: radius,
            order_mu: mu,
            box_radius: r_max,
            points_per_axis: model.points(),
        },
        None => EllipticityReport {
            elliptic: false,
            certificate_c: 0.0,
            radius_m0: f64::INFINITY,
            order_mu: mu,
            box_radius: r_max,
            points_per_axis: model.points(),
        },
    }
}

/// Truncated asymptotic sum: the pointwise partial sum of the first `n`
/// symbols, which must carry strictly decreasing declared orders. The
/// result inherits the leading order.
pub fn asymptotic_partial_sum(symbols: &[Symbol], n: usize) -> Result<Symbol> {
    assert!(!symbols.is_empty() && n >= 1, "need at least one term");
    let orders: Vec<f64> = symbols
        .iter()
        .map(|s| s.class().map(|c| c.mu).ok_or(Error::MissingClassDeclaration))
        .collect::<Result<_>>()?;
    if orders.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::NonDecreasingOrders(orders));
    }
    let take = n.min(symbols.len());
    let mut acc = symbols[0].clone();
    for s in &symbols[1..take] {
        acc = acc.add(s)?;
    }
    let lead = symbols[0].class().unwrap();
    Ok(acc.with_class(lead.mu, lead.rho, lead.delta))
}

// ---------------------------------------------------------------------------
// Built-in example symbols
// ---------------------------------------------------------------------------

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Shift-minus-identity multiplier along `axis` (1-based):
/// `e^{2 pi i theta_j} - 1`.
pub fn example1(model: &LatticeModel, axis1: usize) -> Result<Symbol> {
    let axis = check_axis(model, axis1)?;
    Ok(Symbol::from_theta_fn(model, |theta| {
        Complex64::from_polar(1.0, TWO_PI * theta[axis]) - Complex64::ONE
    })
    .with_class(0.0, 1.0, 0.0))
}

/// Weighted two-sided shift with oscillating zero-order terms:
/// `|k|^r (e^{2 pi i theta_j} + e^{-2 pi i (k.theta)/hbar} a)
///  - |k|^s (e^{-2 pi i theta_j} + e^{-2 pi i (k.theta)/hbar} b)`.
pub fn example2(
    model: &LatticeModel,
    r: f64,
    s: f64,
    a: Complex64,
    b: Complex64,
    axis1: usize,
) -> Result<Symbol> {
    let axis = check_axis(model, axis1)?;
    let hbar = model.hbar();
    Ok(Symbol::from_fn(model, |k, theta| {
        let absk = k.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dot: f64 = k.iter().zip(theta).map(|(a, b)| a * b).sum();
        let osc = Complex64::from_polar(1.0, -TWO_PI * dot / hbar);
        let fwd = Complex64::from_polar(1.0, TWO_PI * theta[axis]);
        let bwd = Complex64::from_polar(1.0, -TWO_PI * theta[axis]);
        absk.powf(r) * (fwd + osc * a) - absk.powf(s) * (bwd + osc * b)
    })
    .with_class(r.max(s), 1.0, 0.0))
}

/// Symmetric nearest-neighbor sum plus a constant:
/// `2 i sum_j sin(2 pi theta_j) + c`.
pub fn example3(model: &LatticeModel, c: Complex64) -> Symbol {
    Symbol::from_theta_fn(model, |theta| {
        let s: f64 = theta.iter().map(|&t| (TWO_PI * t).sin()).sum();
        Complex64::new(0.0, 2.0 * s) + c
    })
    .with_class(0.0, 1.0, 0.0)
}

/// Symbol of the introductory difference equation:
/// `2 sum_j cos(2 pi theta_j) - 2 a`.
pub fn intro(model: &LatticeModel, a: Complex64) -> Symbol {
    Symbol::from_theta_fn(model, |theta| {
        let s: f64 = theta.iter().map(|&t| (TWO_PI * t).cos()).sum();
        Complex64::new(2.0 * s, 0.0) - 2.0 * a
    })
    .with_class(0.0, 1.0, 0.0)
}

/// Weight symbol `(1 + |k|)^s`.
pub fn weight(model: &LatticeModel, s: f64) -> Symbol {
    Symbol::from_k_fn(model, |k| {
        let absk = k.iter().map(|v| v * v).sum::<f64>().sqrt();
        Complex64::new((1.0 + absk).powf(s), 0.0)
    })
    .with_class(s, 1.0, 0.0)
}

fn check_axis(model: &LatticeModel, axis1: usize) -> Result<usize> {
    if axis1 == 0 || axis1 > model.dim() {
        return Err(Error::BadParameter(format!(
            "axis j = {axis1} outside 1..={}",
            model.dim()
        )));
    }
    Ok(axis1 - 1)
}

/// Split a builtin argument list on top-level commas.
fn split_args(args: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in args.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(args[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = args[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out.retain(|s| !s.is_empty());
    out
}

fn parse_complex_value(text: &str) -> Result<Complex64> {
    let expr = dsl::parse(text).map_err(Error::Parse)?;
    let b = Bindings::default();
    dsl::evaluate(&expr, &b).map_err(|e| {
        Error::BadParameter(format!("parameter value `{text}` does not evaluate: {e}"))
    })
}

struct BuiltinArgs {
    named: HashMap<String, String>,
    positional: Vec<String>,
}

impl BuiltinArgs {
    fn parse(args: &str) -> Self {
        let mut named = HashMap::new();
        let mut positional = Vec::new();
        for piece in split_args(args) {
            if let Some(eq) = top_level_eq(piece) {
                named.insert(piece[..eq].trim().to_string(), piece[eq + 1..].trim().to_string());
            } else {
                positional.push(piece.to_string());
            }
        }
        Self { named, positional }
    }

    fn complex(&self, key: &str, position: usize) -> Result<Option<Complex64>> {
        match self.text(key, position) {
            Some(text) => parse_complex_value(&text).map(Some),
            None => Ok(None),
        }
    }

    fn real(&self, key: &str, position: usize) -> Result<Option<f64>> {
        match self.complex(key, position)? {
            Some(v) if v.im.abs() < 1e-12 => Ok(Some(v.re)),
            Some(v) => Err(Error::BadParameter(format!(
                "parameter `{key}` must be real, got {v}"
            ))),
            None => Ok(None),
        }
    }

    fn text(&self, key: &str, position: usize) -> Option<String> {
        self.named
            .get(key)
            .cloned()
            .or_else(|| self.positional.get(position).cloned())
    }
}

fn top_level_eq(piece: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in piece.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            '=' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

/// Construct a built-in symbol from its textual form, e.g.
/// `example3(c=3)`, `weight(s=2)`, `multiplier(exp(2*pi*i*theta1)-1)`,
/// `example2(r=1, s=0, a=2, b=1, j=1)`, `intro(a=2+i)`.
pub fn builtin(spec: &str, model: &LatticeModel) -> Result<Symbol> {
    let spec = spec.trim();
    let (name, args) = match spec.find('(') {
        Some(open) if spec.ends_with(')') => {
            (spec[..open].trim(), &spec[open + 1..spec.len() - 1])
        }
        _ => (spec, ""),
    };
    let args = BuiltinArgs::parse(args);
    let missing = |key: &str| Error::BadParameter(format!("builtin `{name}` needs `{key}`"));
    match name {
        "example1" => {
            let j = args.real("j", 0)?.unwrap_or(1.0);
            example1(model, as_axis(j)?)
        }
        "example2" => {
            let r = args.real("r", 0)?.ok_or_else(|| missing("r"))?;
            let s = args.real("s", 1)?.ok_or_else(|| missing("s"))?;
            let a = args.complex("a", 2)?.ok_or_else(|| missing("a"))?;
            let b = args.complex("b", 3)?.ok_or_else(|| missing("b"))?;
            let j = args.real("j", 4)?.unwrap_or(1.0);
            example2(model, r, s, a, b, as_axis(j)?)
        }
        "example3" => {
            let c = args.complex("c", 0)?.ok_or_else(|| missing("c"))?;
            Ok(example3(model, c))
        }
        "intro" => {
            let a = args.complex("a", 0)?.ok_or_else(|| missing("a"))?;
            Ok(intro(model, a))
        }
        "weight" => {
            let s = args.real("s", 0)?.ok_or_else(|| missing("s"))?;
            Ok(weight(model, s))
        }
        "multiplier" => {
            let text = args.text("expr", 0).ok_or_else(|| missing("expr"))?;
            let expr = dsl::parse(&text).map_err(Error::Parse)?;
            let used = dsl::used_variables(&expr);
            if used.uses_k || used.uses_l {
                return Err(Error::BadParameter(
                    "multiplier expression may only use theta variables".into(),
                ));
            }
            Symbol::from_expr(model, &expr, &HashMap::new())
                .map(|s| s.with_class(0.0, 1.0, 0.0))
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

fn as_axis(j: f64) -> Result<usize> {
    if j.fract() != 0.0 || j < 1.0 {
        return Err(Error::BadParameter(format!("axis j must be a positive integer, got {j}")));
    }
    Ok(j as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, random_symbol};

    #[test]
    fn seminorm_of_constant_symbol() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = Symbol::constant(&model, Complex64::ONE).with_class(0.0, 1.0, 0.0);
        let report = seminorm_estimate(&sigma, 2, 2).unwrap();
        assert_close(report.constant(&[0], &[0]).unwrap(), 1.0, 1e-12);
        for e in &report.entries {
            if e.alpha.iter().any(|&a| a > 0) || e.beta.iter().any(|&b| b > 0) {
                assert!(e.constant < 1e-10, "({:?},{:?}) -> {}", e.alpha, e.beta, e.constant);
            }
        }
    }

    #[test]
    fn seminorm_of_example1_leading_constant() {
        let model = LatticeModel::new(1, 0.5, 32).unwrap();
        let sigma = example1(&model, 1).unwrap();
        let report = seminorm_estimate(&sigma, 1, 1).unwrap();
        // max |e^{2 pi i theta} - 1| over the grid is attained at theta = 1/2
        assert_close(report.constant(&[0], &[0]).unwrap(), 2.0, 1e-12);
    }

    #[test]
    fn seminorm_requires_declaration() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let sigma = Symbol::constant(&model, Complex64::ONE);
        assert!(matches!(
            seminorm_estimate(&sigma, 1, 1),
            Err(Error::MissingClassDeclaration)
        ));
    }

    #[test]
    fn seminorm_of_squared_weight_stable_under_box_growth() {
        // Differences up to |alpha| <= mu/rho keep bounded constants under
        // box growth; the wrap seam only enters at higher orders.
        let mut largests = Vec::new();
        for m in [16usize, 32, 64] {
            let model = LatticeModel::new(1, 0.5, m).unwrap();
            let sigma = Symbol::from_k_fn(&model, |k| {
                Complex64::new(1.0 + k[0] * k[0], 0.0)
            })
            .with_class(2.0, 1.0, 0.0);
            let report = seminorm_estimate(&sigma, 1, 2).unwrap();
            let largest = report.largest();
            assert!(largest.is_finite());
            largests.push(largest);
        }
        assert!(
            largests[2] < 1.25 * largests[0] + 0.1,
            "constants blow up under box growth: {largests:?}"
        );
    }

    #[test]
    fn ellipticity_of_examples() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        // example1 vanishes at theta_j = 0 for every k
        let rep = ellipticity_check(&example1(&model, 1).unwrap(), 0.0);
        assert!(!rep.elliptic);
        // example3 with c = 3 is elliptic of order zero everywhere
        let rep = ellipticity_check(&example3(&model, Complex64::new(3.0, 0.0)), 0.0);
        assert!(rep.elliptic);
        assert!(rep.certificate_c > 0.0);
        assert_close(rep.radius_m0, 0.0, 1e-12);
    }

    #[test]
    fn ellipticity_of_quadratic_weight() {
        let model = LatticeModel::new(1, 0.5, 32).unwrap();
        let sigma = Symbol::from_k_fn(&model, |k| Complex64::new(1.0 + k[0] * k[0], 0.0));
        let rep = ellipticity_check(&sigma, 2.0);
        assert!(rep.elliptic);
        // (1 + |k|^2) >= (1/2)(1 + |k|)^2 elementary inequality
        assert!(rep.certificate_c >= 0.5 - 1e-12, "C = {}", rep.certificate_c);
    }

    #[test]
    fn example2_certificate_survives_growth_only_when_orders_allow() {
        // On a finite grid the certificate can be positive either way; the
        // distinction is that for r >= s it stabilizes under box growth
        // while for r < s it decays toward zero.
        let a = Complex64::new(2.0, 0.0);
        let b = Complex64::new(1.0, 0.0);
        let scan = |r: f64, s: f64| -> (f64, f64) {
            let mut cs = [0.0f64; 2];
            for (i, m) in [16usize, 32].into_iter().enumerate() {
                let model = LatticeModel::new(1, 0.5, m).unwrap();
                let sigma = example2(&model, r, s, a, b, 1).unwrap();
                cs[i] = ellipticity_check(&sigma, r.max(s)).certificate_c;
            }
            (cs[0], cs[1])
        };
        let (c_small, c_large) = scan(1.0, 0.0);
        assert!(c_small > 0.0 && c_large > 0.6 * c_small, "{c_small} -> {c_large}");
        let (c_small, c_large) = scan(0.0, 1.0);
        assert!(
            c_large < 0.75 * c_small,
            "certificate should decay for r < s: {c_small} -> {c_large}"
        );
    }

    #[test]
    fn ellipticity_certificate_scales_linearly() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let sigma = example3(&model, Complex64::new(3.0, 0.0));
        let base = ellipticity_check(&sigma, 0.0);
        let scaled = ellipticity_check(&sigma.scale(Complex64::new(2.5, 0.0)), 0.0);
        assert_close(scaled.certificate_c, 2.5 * base.certificate_c, 1e-12);
        assert_close(scaled.radius_m0, base.radius_m0, 1e-12);
    }

    #[test]
    fn partial_sum_respects_order_check() {
        let model = LatticeModel::new(1, 0.5, 16).unwrap();
        let a = weight(&model, 0.0);
        let b = weight(&model, -1.0);
        // single term returned unchanged
        let s1 = asymptotic_partial_sum(&[a.clone(), b.clone()], 1).unwrap();
        assert!(s1
            .table()
            .iter()
            .zip(a.table())
            .all(|(x, y)| (x - y).norm() < 1e-15));
        // two-term partial sum is the pointwise sum
        let s2 = asymptotic_partial_sum(&[a.clone(), b.clone()], 2).unwrap();
        for i in 0..s2.table().len() {
            assert!((s2.table()[i] - (a.table()[i] + b.table()[i])).norm() < 1e-15);
        }
        // non-decreasing orders rejected
        assert!(matches!(
            asymptotic_partial_sum(&[b, a], 2),
            Err(Error::NonDecreasingOrders(_))
        ));
    }

    #[test]
    fn partial_sum_tail_decays_with_declared_order() {
        // sigma_j = (1+|k|)^{-j}: the tail beyond N should decay like
        // (1+|k|)^{-N}; check the fitted exponent on the outer half-box.
        let model = LatticeModel::new(1, 1.0, 64).unwrap();
        let terms: Vec<Symbol> = (0..5).map(|j| weight(&model, -(j as f64))).collect();
        let n = 3usize;
        let full = asymptotic_partial_sum(&terms, terms.len()).unwrap();
        let part = asymptotic_partial_sum(&terms, n).unwrap();
        let tail = full.sub(&part).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..model.size() {
            let r = model.norm_k(k);
            if r > 2.0 {
                let amp = tail.row(k).iter().map(|v| v.norm()).fold(0.0, f64::max);
                // tail = sum_{j >= n} (1+r)^{-j}; leading term (1+r)^{-n}
                xs.push((1.0 + r).ln());
                ys.push(amp.ln());
            }
        }
        let fit = crate::report::fit_line(&xs, &ys);
        assert!(
            (fit.slope - (-(n as f64))).abs() < 0.2,
            "fitted exponent {} for tail of order -{n}",
            fit.slope
        );
    }

    #[test]
    fn builtin_parsing_and_equivalence() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        let via_builtin = builtin("example3(c=3)", &model).unwrap();
        // example3 at theta = 0 equals c
        assert_close(via_builtin.value(3, 0).re, 3.0, 1e-14);

        let w0 = builtin("weight(s=0)", &model).unwrap();
        assert!(w0.table().iter().all(|v| (v - Complex64::ONE).norm() < 1e-15));

        let e1 = builtin("example1(j=2)", &model).unwrap();
        let expr = dsl::parse("exp(2*pi*i*theta2) - 1").unwrap();
        let twin = Symbol::from_expr(&model, &expr, &HashMap::new()).unwrap();
        for i in 0..e1.table().len() {
            assert!((e1.table()[i] - twin.table()[i]).norm() < 1e-15);
        }

        assert!(matches!(
            builtin("nosuch(c=1)", &model),
            Err(Error::UnknownBuiltin(_))
        ));
        assert!(matches!(builtin("example3()", &model), Err(Error::BadParameter(_))));
        assert!(matches!(
            builtin("example1(j=7)", &model),
            Err(Error::BadParameter(_))
        ));
    }

    #[test]
    fn builtin_tabulation_is_reproducible() {
        let model = LatticeModel::new(1, 0.25, 16).unwrap();
        let a = builtin("intro(a=2+i)", &model).unwrap();
        let b = builtin("intro(a=2+i)", &model).unwrap();
        assert_eq!(a.table(), b.table());
    }

    #[test]
    fn amplitude_budget_enforced() {
        let model = LatticeModel::new(2, 0.5, 64).unwrap();
        assert!(matches!(
            Amplitude::from_fn(&model, |_, _, _| Complex64::ONE),
            Err(Error::MemoryBudgetExceeded { .. })
        ));
    }

    #[test]
    fn reciprocal_reports_vanishing_point() {
        let model = LatticeModel::new(1, 1.0, 8).unwrap();
        let sigma = example1(&model, 1).unwrap(); // vanishes at theta = 0
        match sigma.reciprocal(1e-10) {
            Err(Error::SymbolVanishesOnGrid { grid_idx, .. }) => assert_eq!(grid_idx, 0),
            other => panic!("expected vanishing error, got {other:?}"),
        }
    }

    #[test]
    fn reflect_theta_is_involution() {
        let model = LatticeModel::new(2, 0.5, 8).unwrap();
        let sigma = random_symbol(&model, 17);
        let twice = sigma.reflect_theta().reflect_theta();
        assert_eq!(sigma.table(), twice.table());
    }
}
