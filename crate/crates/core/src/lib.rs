//! Combinatorial connection Laplacians on triangulated manifolds.
//!
//! The crate provides Whitney calculus on piecewise-flat simplicial
//! complexes, a graded-commutative simplicial cup product, twisted
//! (magnetic) coboundaries and Laplacians, a bundle-embedding
//! discretization of general connection Laplacians, a dense generalized
//! Hermitian eigensolver, and a harness that verifies the spectral
//! convergence of the discrete operators against exact model spectra.

pub mod bundle;
pub mod cup;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod harness;
pub mod laplacian;
pub mod simplicial;
pub mod spectra;
pub mod whitney;

pub use error::{Error, Result};
pub use geometry::{GeometricComplex, MeshReport};
pub use simplicial::{build_complex, Cochain, Simplex, SimplicialComplex};
