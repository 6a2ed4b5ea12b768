//! Discrete regular Helmholtz decompositions of lowest-order edge elements on
//! structured tetrahedral meshes of polyhedral block complexes.
//!
//! A field `v` in the Nédélec space is split as `v = grad p + r_h w + R` with
//! `p` nodal, `w` a nodal vector field and `R` a high-frequency remainder,
//! while zero tangential data on a prescribed trace set is kept exactly.

pub mod config;
pub mod decompose;
pub mod error;
pub mod fem;
pub mod hx;
pub mod mesh;
pub mod operators;
pub mod solve;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use mesh::{GeometryId, TetMesh, TraceSet};
