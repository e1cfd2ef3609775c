//! The finite-type varieties X_h: matrices, admissibility, membership,
//! enumeration, fibrations, Schubert reduction and point counting.

pub mod counting;
pub mod gmatrix;
pub mod lambda;
pub mod points;
pub mod schubert;

pub use gmatrix::{admissibility, g_matrix, Admissibility, GMode};
pub use points::{VarietyPoint, XhSpace};
