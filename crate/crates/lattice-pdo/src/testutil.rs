//! Deterministic random data and assertion helpers shared by unit tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{LatticeFunction, LatticeModel, TorusFunction};
use crate::symbol::Symbol;

pub fn assert_close(a: f64, b: f64, tol: f64) {
    assert!(
        (a - b).abs() <= tol,
        "expected {a} ~ {b} within {tol}, gap {}",
        (a - b).abs()
    );
}

pub fn random_values(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn random_lattice_fn(model: &LatticeModel, seed: u64) -> LatticeFunction {
    LatticeFunction::from_values(model, random_values(model.size(), seed)).unwrap()
}

pub fn random_torus_fn(model: &LatticeModel, seed: u64) -> TorusFunction {
    TorusFunction::from_values(model, random_values(model.size(), seed)).unwrap()
}

/// Random dense symbol table, no smoothness implied.
pub fn random_symbol(model: &LatticeModel, seed: u64) -> Symbol {
    Symbol::from_table(model, random_values(model.size() * model.size(), seed)).unwrap()
}

/// Random symbol whose rows decay like `(1 + |k|)^{-2}`, a trace-class-style
/// profile on growing boxes.
pub fn random_decaying_symbol(model: &LatticeModel, seed: u64) -> Symbol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = model.size();
    let mut table = Vec::with_capacity(size * size);
    for k in 0..size {
        let w = model.weight(k, -2.0);
        for _ in 0..size {
            table.push(Complex64::new(
                w * rng.random_range(-1.0..1.0),
                w * rng.random_range(-1.0..1.0),
            ));
        }
    }
    Symbol::from_table(model, table).unwrap()
}
