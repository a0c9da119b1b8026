//! Numerical laboratory for weighted Hardy inequalities
//!
//! `c ∫ φ²/|x|² dμ ≤ ∫ |∇φ|² dμ + k₁ ∫ φ² dμ`
//!
//! and for the Kolmogorov operator `L = Δ + ∇μ/μ · ∇` perturbed by the
//! inverse-square potential `c/|x|²`. Everything is reduced to radial
//! functions on a graded 1D mesh of `(r₁, R]`, so all discrete operators are
//! symmetric tridiagonal.
//!
//! Layout:
//! - [`weights`]: radial weight families and the hypothesis checks on them.
//! - [`discretization`]: graded grids, Gauss quadrature, assembled forms.
//! - [`linalg`]: tridiagonal storage and the generalized eigensolver.
//! - [`hardy`]: sharp constants, the constant curve `c(α)`, proof-chain checks.
//! - [`spectrum`]: bottom of the spectrum and the blowup witness family.
//! - [`evolution`]: implicit time stepping of the truncated problem.

pub mod discretization;
pub mod error;
pub mod evolution;
pub mod hardy;
pub mod io;
pub mod linalg;
pub mod spectrum;
pub mod weights;

pub use discretization::{BoundaryCondition, DiscreteForms, Grading, Ladder, RadialGrid};
pub use error::{Error, Result};
pub use weights::{Family, WeightSpec};

/// Map `f` over `items`, in parallel when the `parallel` feature is on.
///
/// Output order always matches input order.
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
