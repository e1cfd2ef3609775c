//! Fixed-locus enumeration, Euler characteristics and Lefschetz numbers,
//! virtual characters and their inner products, and the counting suites.

pub mod cusp;
pub mod lefschetz;
pub mod loci;

pub use lefschetz::Workbench;
