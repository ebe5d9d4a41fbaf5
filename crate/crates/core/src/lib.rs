//! Tropical (max-plus) reproducing kernels on finite grids.
//!
//! Extended-real arithmetic with upper and lower additions, tropically
//! positive semidefinite kernels, Fenchel–Moreau conjugations and their
//! ranges, maximal kernels and regularity of max-plus matrices, the
//! tropical representer theorem, and Maupertuis kernels for value
//! functions and inverse optimal control.

pub mod conjugation;
pub mod control;
pub mod error;
pub mod ext;
pub mod io;
pub mod kernels;
pub mod linear_theory;
pub mod matrix;
pub mod representer;

pub use conjugation::{duality_product, ConjugationOp, MonotoneCheck, RangeCheck};
pub use error::{Error, Result};
pub use ext::{dirac, dirac_at, DiracKind, ExtReal, GridFunction, PointSet, DEFAULT_TOL};
pub use kernels::{ClosedForm, FeatureMap, GramKernel, KernelRep};
pub use matrix::Matrix;
