//! maxsym-core: exact symbolic and numeric engine for linear ordinary
//! differential equations of maximal Lie point symmetry.
//!
//! The crate is layered: `diffalg` provides the exact polynomial algebra,
//! `itergen` builds iterative equations from it, `xform` and `solbasis`
//! verify the transformation theory and produce solution bases, and
//! `numeval` turns symbolic answers into checked floating-point ones.

pub mod diffalg;
pub mod itergen;
pub mod numeval;
pub mod solbasis;
pub mod xform;

pub use diffalg::{DiffPoly, Indeterminate, Symbol};
pub use itergen::{generate_maxsym, LinearOdeForm};
pub use numeval::{ClosedFormFn, NumericError};
pub use solbasis::SolutionBasis;
