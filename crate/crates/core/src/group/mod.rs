//! Representatives, parahoric quotients, tori and the twisted solvers.

pub mod rep;
pub mod solvers;
pub mod table;

pub use rep::{MonomialMat, ParahoricPattern, Rep, RepKind};
pub use table::GroupTable;
