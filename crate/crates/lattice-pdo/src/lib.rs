//! Numerical calculus of pseudo-difference operators on finite periodic
//! lattice models.
//!
//! Everything runs on a box of `M^n` lattice points `k = hbar*m` with its
//! dual torus grid, on which quantization, kernels, composition, adjoints,
//! parametrices and the norm identities of the calculus are exact
//! finite-dimensional objects that can be checked against dense matrix
//! oracles. The crate provides:
//!
//! - [`model`]: the periodic model, Fourier pair and weighted norms;
//! - [`diffops`]: forward differences, spectral derivative-type operators,
//!   generalized q-differences and the discrete torus Taylor expansion;
//! - [`dsl`]: a small expression language for entering symbols;
//! - [`symbol`]: symbol/amplitude tables, class seminorms, ellipticity,
//!   asymptotic partial sums and the built-in example symbols;
//! - [`quantize`]: the quantization map, kernel matrices, symbol extraction
//!   and kernel decay diagnostics;
//! - [`calculus`]: composition/adjoint/transpose expansions and the
//!   parametrix recursion, each paired with an exact matrix oracle;
//! - [`analysis`]: Hilbert-Schmidt/Schatten/trace identities, boundedness
//!   and compactness indicators, Garding constants and the lattice-torus
//!   conjugation check;
//! - [`pde`]: elliptic and parabolic difference-equation solvers;
//! - [`limit`]: small-spacing convergence studies against closed-form
//!   Euclidean derivatives;
//! - [`report`]: JSON/CSV serialization for all report types.

pub mod analysis;
pub mod calculus;
pub mod diffops;
pub mod dsl;
pub mod error;
pub mod limit;
pub mod model;
pub mod pde;
pub mod quantize;
pub mod report;
pub mod symbol;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use model::{forward_fourier, inverse_fourier, LatticeFunction, LatticeModel, TorusFunction};
pub use symbol::{Amplitude, Symbol};

// Every value type is immutable after construction and free of interior
// mutability, so results may be shared and sent across threads.
#[cfg(test)]
mod concurrency_contract {
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn core_types_are_send_and_sync() {
        assert_send_sync::<crate::LatticeModel>();
        assert_send_sync::<crate::LatticeFunction>();
        assert_send_sync::<crate::TorusFunction>();
        assert_send_sync::<crate::Symbol>();
        assert_send_sync::<crate::Amplitude>();
        assert_send_sync::<crate::quantize::KernelMatrix>();
        assert_send_sync::<crate::calculus::ExpansionResult>();
        assert_send_sync::<crate::calculus::ParametrixResult>();
        assert_send_sync::<crate::dsl::SymbolExpr>();
        assert_send_sync::<crate::pde::ParabolicProblem>();
    }
}
