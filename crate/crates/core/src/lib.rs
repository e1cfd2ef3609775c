//! Exact computational workbench for higher Deligne-Lusztig varieties
//! attached to inner forms of GL_n over a local function field.
//!
//! The crate constructs the finite truncations: the parahoric quotients
//! `G_h` with their tori `T_h`, the varieties `X_h` over truncated rings
//! O/pi^h, exact cyclotomic character theory for T_h, and Lefschetz-number
//! machinery for the counting identities verified by the suite layer.

pub mod error;
pub mod fit;
pub mod ring;
pub mod trace;

pub mod chars;
pub mod group;
pub mod linalg;
pub mod variety;

pub use error::{Error, Result};
