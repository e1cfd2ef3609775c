//! Exact arithmetic: finite field towers and truncated local rings.

pub mod field;
pub mod tower;
pub mod trunc;
pub mod units;

use num_bigint::BigUint;

pub use field::{FqElem, FqField};
pub use tower::FieldTower;
pub use trunc::TruncElem;
pub use units::UnitGroupStructure;

/// Canonical serialization of a field element: the exponent of the fixed
/// generator, or "0" for zero.
pub fn serialize_elem(t: &FieldTower, a: FqElem) -> String {
    match t.field.dlog(a) {
        None => "0".to_string(),
        Some(e) => format!("g{e}"),
    }
}

pub fn deserialize_elem(t: &FieldTower, s: &str) -> Option<FqElem> {
    if s == "0" {
        return Some(t.zero());
    }
    let e = s.strip_prefix('g')?.parse::<BigUint>().ok()?;
    Some(t.field.pow_big(t.field.generator(), &e))
}

/// Canonical serialization of a truncated element: generator exponents of the
/// coefficients, little-endian in pi.
pub fn serialize_trunc(t: &FieldTower, x: &TruncElem) -> String {
    let parts: Vec<String> = x.coeffs.iter().map(|&c| serialize_elem(t, c)).collect();
    parts.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_roundtrip() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        for a in t.field.elements() {
            let s = serialize_elem(&t, a);
            assert_eq!(deserialize_elem(&t, &s), Some(a));
        }
    }
}
