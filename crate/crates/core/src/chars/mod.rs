//! Exact character theory of the torus T_h.

pub mod cyclotomic;
pub mod henniart;
pub mod torus;

pub use cyclotomic::Cyclotomic;
pub use torus::{TorusCharacter, TorusData};
