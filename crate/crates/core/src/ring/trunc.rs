//! Elements of the truncated local ring O/pi^h in equal characteristic:
//! coefficient vectors over the ambient field, multiplied polynomially.

use super::field::FqElem;
use super::tower::FieldTower;
use crate::error::{Error, Result};

/// Element of O/pi^{h} with coefficients in the ambient field.
/// The working precision is the length of `coeffs` (coefficient of pi^l at
/// index l). Binary operations require equal precision.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruncElem {
    pub coeffs: Vec<FqElem>,
}

impl std::fmt::Debug for TruncElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Trunc{:?}", self.coeffs)
    }
}

impl TruncElem {
    pub fn zero(t: &FieldTower, h: usize) -> TruncElem {
        TruncElem {
            coeffs: vec![t.zero(); h],
        }
    }

    pub fn one(t: &FieldTower, h: usize) -> TruncElem {
        let mut e = Self::zero(t, h);
        e.coeffs[0] = t.one();
        e
    }

    /// [a] * pi^l at precision h.
    pub fn monomial(t: &FieldTower, a: FqElem, l: usize, h: usize) -> TruncElem {
        let mut e = Self::zero(t, h);
        if l < h {
            e.coeffs[l] = a;
        }
        e
    }

    pub fn from_coeffs(coeffs: Vec<FqElem>) -> TruncElem {
        TruncElem { coeffs }
    }

    pub fn precision(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self, t: &FieldTower) -> bool {
        self.coeffs.iter().all(|&c| t.field.is_zero(c))
    }

    /// Index of the first nonzero coefficient; None for zero (valuation infinity).
    pub fn valuation(&self, t: &FieldTower) -> Option<usize> {
        self.coeffs.iter().position(|&c| !t.field.is_zero(c))
    }

    pub fn is_unit(&self, t: &FieldTower) -> bool {
        !t.field.is_zero(self.coeffs[0])
    }

    fn check_prec(&self, other: &TruncElem) -> Result<()> {
        if self.precision() != other.precision() {
            return Err(Error::PrecisionMismatch(self.precision(), other.precision()));
        }
        Ok(())
    }

    pub fn add(&self, other: &TruncElem, t: &FieldTower) -> TruncElem {
        self.check_prec(other).expect("precision mismatch in add");
        TruncElem {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| t.field.add(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &TruncElem, t: &FieldTower) -> TruncElem {
        self.check_prec(other).expect("precision mismatch in sub");
        TruncElem {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| t.field.sub(a, b))
                .collect(),
        }
    }

    pub fn neg(&self, t: &FieldTower) -> TruncElem {
        TruncElem {
            coeffs: self.coeffs.iter().map(|&a| t.field.neg(a)).collect(),
        }
    }

    pub fn mul(&self, other: &TruncElem, t: &FieldTower) -> TruncElem {
        self.check_prec(other).expect("precision mismatch in mul");
        let h = self.precision();
        let mut out = vec![t.zero(); h];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if t.field.is_zero(a) {
                continue;
            }
            for (j, &b) in other.coeffs.iter().take(h - i).enumerate() {
                if t.field.is_zero(b) {
                    continue;
                }
                out[i + j] = t.field.add(out[i + j], t.field.mul(a, b));
            }
        }
        TruncElem { coeffs: out }
    }

    pub fn scale(&self, c: FqElem, t: &FieldTower) -> TruncElem {
        TruncElem {
            coeffs: self.coeffs.iter().map(|&a| t.field.mul(a, c)).collect(),
        }
    }

    /// Multiplicative inverse; the element must be a unit.
    pub fn inv(&self, t: &FieldTower) -> Result<TruncElem> {
        if !self.is_unit(t) {
            return Err(Error::NonUnitDivisor(
                self.valuation(t).unwrap_or(self.precision()),
            ));
        }
        let h = self.precision();
        let c0inv = t.field.inv(self.coeffs[0]);
        let mut out = vec![t.zero(); h];
        out[0] = c0inv;
        // Newton-free back substitution: (sum a_i pi^i)(sum b_j pi^j) = 1
        for k in 1..h {
            let mut acc = t.zero();
            for i in 1..=k {
                let a = self.coeffs[i];
                if t.field.is_zero(a) {
                    continue;
                }
                acc = t.field.add(acc, t.field.mul(a, out[k - i]));
            }
            out[k] = t.field.neg(t.field.mul(c0inv, acc));
        }
        Ok(TruncElem { coeffs: out })
    }

    /// Multiplication by pi^k; keeps precision, top coefficients fall off.
    pub fn mul_pi(&self, k: usize, _t: &FieldTower) -> TruncElem {
        let h = self.precision();
        let mut out = vec![FqElem::ZERO; h];
        for i in k..h {
            out[i] = self.coeffs[i - k];
        }
        TruncElem { coeffs: out }
    }

    /// Exact division by pi^k: lowers precision by k. Errors when the
    /// valuation is smaller than k.
    pub fn div_pi(&self, k: usize, t: &FieldTower) -> Result<TruncElem> {
        if k == 0 {
            return Ok(self.clone());
        }
        let h = self.precision();
        if k > h {
            return Err(Error::PrecisionUnderflow(format!(
                "dividing precision-{h} element by pi^{k}"
            )));
        }
        for i in 0..k {
            if !t.field.is_zero(self.coeffs[i]) {
                return Err(Error::InexactDivision(format!(
                    "valuation {} < {k}",
                    self.valuation(t).unwrap()
                )));
            }
        }
        Ok(TruncElem {
            coeffs: self.coeffs[k..].to_vec(),
        })
    }

    /// Truncate to a lower precision.
    pub fn truncate(&self, h: usize) -> TruncElem {
        assert!(h <= self.precision());
        TruncElem {
            coeffs: self.coeffs[..h].to_vec(),
        }
    }

    /// Lift to a higher precision by zero extension.
    pub fn lift(&self, h: usize) -> TruncElem {
        assert!(h >= self.precision());
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(h, FqElem::ZERO);
        TruncElem { coeffs }
    }

    /// Coefficientwise sigma^k.
    pub fn sigma(&self, k: i64, t: &FieldTower) -> TruncElem {
        TruncElem {
            coeffs: self.coeffs.iter().map(|&c| t.sigma_pow(c, k)).collect(),
        }
    }

    /// True when every coefficient lies in F_{q^d}.
    pub fn coeffs_in_subfield(&self, d: usize, t: &FieldTower) -> bool {
        self.coeffs.iter().all(|&c| t.in_subfield(c, d))
    }

    pub fn pow(&self, mut e: u64, t: &FieldTower) -> TruncElem {
        let mut acc = TruncElem::one(t, self.precision());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base, t);
            }
            base = base.mul(&base, t);
            e >>= 1;
        }
        acc
    }
}

/// Norm of a truncated element of O_L/pi^h down to O_K/pi^h:
/// product of sigma^j-conjugates for j = 0..n-1.
pub fn norm_to_base(x: &TruncElem, t: &FieldTower) -> TruncElem {
    let n = t.n();
    let mut acc = TruncElem::one(t, x.precision());
    for j in 0..n {
        acc = acc.mul(&x.sigma(j as i64, t), t);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower() -> FieldTower {
        FieldTower::new(2, 1, 1, 2, 2).unwrap()
    }

    #[test]
    fn unit_inverse_roundtrip() {
        let t = tower();
        let h = 3;
        let g = t.field.generator();
        let x = TruncElem::from_coeffs(vec![g, t.one(), t.field.mul(g, g)]);
        let xi = x.inv(&t).unwrap();
        assert_eq!(x.mul(&xi, &t), TruncElem::one(&t, h));
    }

    #[test]
    fn pi_nilpotent() {
        let t = tower();
        let pi = TruncElem::monomial(&t, t.one(), 1, 3);
        let p3 = pi.mul(&pi, &t).mul(&pi, &t);
        assert!(p3.is_zero(&t));
    }

    #[test]
    fn valuation_multiplicative() {
        let t = tower();
        let g = t.field.generator();
        let x = TruncElem::monomial(&t, g, 1, 4);
        let y = TruncElem::monomial(&t, t.one(), 2, 4);
        assert_eq!(x.mul(&y, &t).valuation(&t), Some(3));
    }

    #[test]
    fn div_pi_checks_valuation() {
        let t = tower();
        let x = TruncElem::monomial(&t, t.one(), 1, 3);
        assert!(x.div_pi(1, &t).is_ok());
        assert!(x.div_pi(2, &t).is_err());
        let y = x.div_pi(1, &t).unwrap();
        assert_eq!(y.precision(), 2);
        assert!(y.is_unit(&t));
    }

    #[test]
    fn sigma_ring_homomorphism_exhaustive_small() {
        let t = tower();
        let h = 2;
        let elems: Vec<TruncElem> = {
            let field: Vec<_> = t.field.elements().collect();
            let mut v = Vec::new();
            for &a in field.iter().take(8) {
                for &b in field.iter().take(8) {
                    v.push(TruncElem::from_coeffs(vec![a, b]));
                }
            }
            v
        };
        for x in &elems {
            for y in &elems {
                assert_eq!(
                    x.add(y, &t).sigma(1, &t),
                    x.sigma(1, &t).add(&y.sigma(1, &t), &t)
                );
                assert_eq!(
                    x.mul(y, &t).sigma(1, &t),
                    x.sigma(1, &t).mul(&y.sigma(1, &t), &t)
                );
            }
        }
        let _ = h;
    }
}
