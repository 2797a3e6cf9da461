//! Full symbol of the thermoelastic Dirichlet-to-Neumann map on a compact
//! manifold with boundary, in boundary normal coordinates, and the inverse
//! map recovering the material coefficients and their normal-derivative jets
//! on the boundary from symbol data.
//!
//! The forward path factors the conjugated operator through a first-order
//! pseudodifferential system and solves the full symbol equation degree by
//! degree; the inverse path strips boundary layers from the symbol table.
//! Everything is cross-checked against PDE-level oracles: a direct operator
//! application in jet arithmetic, a constant-coefficient half-space
//! multiplier, and a variable-coefficient slab solver.

pub mod algebra;
pub mod dtn_assembly;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod manifest;
pub mod material;
pub mod operator_symbols;
pub mod oracle;
pub mod reconstruction;
pub mod scalar;
pub mod symbol_calculus;

pub use algebra::{BiJet, TaylorJet};
pub use geometry::{Covector, MetricJet};
pub use material::MaterialJet;
pub use scalar::{ExactComplex, Scalar};
