//! One ambient finite field `F_{q^N}` together with its subfield lattice,
//! realized as Frobenius fixed sets, and the q-power Frobenius.

use num_bigint::BigUint;

use super::field::{FqElem, FqField};
use crate::error::{Error, Result};

/// Ambient field plus the arithmetic data of the tower
/// `F_q ⊂ F_{q^{n0}} ⊂ F_{q^n} ⊂ F_{q^{nm}} ⊂ F_{q^N}`.
pub struct FieldTower {
    pub p: u64,
    /// q = p^f.
    pub f: usize,
    pub n0: usize,
    pub nprime: usize,
    pub m_max: usize,
    /// N: ambient degree over F_q.
    pub ambient_degree: usize,
    pub field: FqField,
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm_upto(m: usize) -> usize {
    (1..=m).fold(1, lcm)
}

impl FieldTower {
    /// Standard tower: ambient degree N = n * lcm(1..m_max) over F_q.
    pub fn new(p: u64, f: usize, n0: usize, nprime: usize, m_max: usize) -> Result<FieldTower> {
        if f == 0 || n0 == 0 || nprime == 0 || m_max == 0 {
            return Err(Error::InvalidParameter(
                "f, n0, nprime, m_max must all be positive".into(),
            ));
        }
        let n = n0 * nprime;
        let ambient = n * lcm_upto(m_max);
        Self::with_ambient_degree(p, f, n0, nprime, m_max, ambient)
    }

    /// Tower with an explicitly chosen ambient degree (must be divisible by n).
    pub fn with_ambient_degree(
        p: u64,
        f: usize,
        n0: usize,
        nprime: usize,
        m_max: usize,
        ambient_degree: usize,
    ) -> Result<FieldTower> {
        let n = n0 * nprime;
        if ambient_degree % n != 0 {
            return Err(Error::InvalidParameter(format!(
                "ambient degree {ambient_degree} not divisible by n = {n}"
            )));
        }
        let field = FqField::new(p, f * ambient_degree)?;
        Ok(FieldTower {
            p,
            f,
            n0,
            nprime,
            m_max,
            ambient_degree,
            field,
        })
    }

    pub fn n(&self) -> usize {
        self.n0 * self.nprime
    }

    /// q as u64 (q = p^f; towers keep q small).
    pub fn q(&self) -> u64 {
        self.p.pow(self.f as u32)
    }

    pub fn zero(&self) -> FqElem {
        self.field.zero()
    }

    pub fn one(&self) -> FqElem {
        self.field.one()
    }

    /// sigma: x -> x^q.
    pub fn sigma(&self, a: FqElem) -> FqElem {
        let mut x = a;
        for _ in 0..self.f {
            x = self.field.frob_p(x);
        }
        x
    }

    /// sigma^k, reduced modulo the ambient degree.
    pub fn sigma_pow(&self, a: FqElem, k: i64) -> FqElem {
        let n = self.ambient_degree as i64;
        let k = k.rem_euclid(n) as usize;
        let mut x = a;
        for _ in 0..k {
            x = self.sigma(x);
        }
        x
    }

    /// Membership in F_{q^d}: fixed by sigma^d.
    pub fn in_subfield(&self, a: FqElem, d: usize) -> bool {
        self.sigma_pow(a, d as i64) == a
    }

    /// Trace to F_{q^d} from F_{q^D}; the element must lie in F_{q^D}.
    pub fn trace_to(&self, a: FqElem, source_degree: usize, target_degree: usize) -> Result<FqElem> {
        if source_degree % target_degree != 0 {
            return Err(Error::NonDividingDegree(target_degree, source_degree));
        }
        let steps = source_degree / target_degree;
        let mut acc = self.field.zero();
        let mut cur = a;
        for _ in 0..steps {
            acc = self.field.add(acc, cur);
            cur = self.sigma_pow(cur, target_degree as i64);
        }
        Ok(acc)
    }

    /// Norm to F_{q^d} from F_{q^D}.
    pub fn norm_to(&self, a: FqElem, source_degree: usize, target_degree: usize) -> Result<FqElem> {
        if source_degree % target_degree != 0 {
            return Err(Error::NonDividingDegree(target_degree, source_degree));
        }
        let steps = source_degree / target_degree;
        let mut acc = self.field.one();
        let mut cur = a;
        for _ in 0..steps {
            acc = self.field.mul(acc, cur);
            cur = self.sigma_pow(cur, target_degree as i64);
        }
        Ok(acc)
    }

    /// All elements of the subfield F_{q^d} inside the ambient field.
    ///
    /// Enumerated as {0} followed by powers g^(k*(Q-1)/(q^d-1)) of the ambient
    /// generator, so the order is deterministic.
    pub fn subfield_elements(&self, d: usize) -> Vec<FqElem> {
        assert!(self.ambient_degree % d == 0);
        let sub_order = BigUint::from(self.q()).pow(d as u32);
        let sub_units = &sub_order - 1u32;
        let cof = &self.field.unit_order_big() / &sub_units;
        let step = self.field.pow_big(self.field.generator(), &cof);
        let count = sub_units.to_u64_digits();
        let count = if count.is_empty() { 0 } else { count[0] };
        let mut out = Vec::with_capacity(count as usize + 1);
        out.push(self.field.zero());
        let mut cur = self.field.one();
        for _ in 0..count {
            out.push(cur);
            cur = self.field.mul(cur, step);
        }
        debug_assert_eq!(cur, self.field.one());
        out
    }

    /// Generator of the subfield F_{q^d}^* (ambient generator raised to the cofactor).
    pub fn subfield_generator(&self, d: usize) -> FqElem {
        let sub_units = BigUint::from(self.q()).pow(d as u32) - 1u32;
        let cof = &self.field.unit_order_big() / &sub_units;
        self.field.pow_big(self.field.generator(), &cof)
    }

    /// Multiplicative order of the subfield F_{q^d}^* as u64.
    pub fn subfield_unit_order(&self, d: usize) -> u64 {
        let v = BigUint::from(self.q()).pow(d as u32) - 1u32;
        let dg = v.to_u64_digits();
        if dg.is_empty() {
            0
        } else {
            dg[0]
        }
    }
}

/// Process-wide cache of towers keyed by their construction parameters.
pub fn cached_tower(
    p: u64,
    f: usize,
    n0: usize,
    nprime: usize,
    ambient_degree: usize,
) -> Result<std::sync::Arc<FieldTower>> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex};
    static CACHE: Mutex<Option<HashMap<(u64, usize, usize, usize, usize), Arc<FieldTower>>>> =
        Mutex::new(None);
    let key = (p, f, n0, nprime, ambient_degree);
    {
        let guard = CACHE.lock().unwrap();
        if let Some(map) = guard.as_ref() {
            if let Some(t) = map.get(&key) {
                return Ok(t.clone());
            }
        }
    }
    let tower = Arc::new(FieldTower::with_ambient_degree(
        p,
        f,
        n0,
        nprime,
        1,
        ambient_degree,
    )?);
    let mut guard = CACHE.lock().unwrap();
    guard
        .get_or_insert_with(HashMap::new)
        .insert(key, tower.clone());
    Ok(tower)
}

/// An isomorphism of the degree-d subfield (d over F_p) between two towers,
/// realized by matching canonical roots of the canonical minimal polynomial.
pub struct Transport {
    solver: crate::linalg::FpMat,
    basis_src: Vec<FqElem>,
    basis_dst: Vec<FqElem>,
}

impl Transport {
    /// d_p: degree of the subfield over the prime field.
    pub fn new(src: &FieldTower, dst: &FieldTower, d_p: usize) -> Result<Transport> {
        if (src.f * src.ambient_degree) % d_p != 0 || (dst.f * dst.ambient_degree) % d_p != 0 {
            return Err(Error::InvalidParameter(format!(
                "subfield of degree {d_p} not contained in both towers"
            )));
        }
        let poly = crate::ring::field::least_irreducible(src.p, d_p);
        let root_src = find_root(src, &poly, d_p)?;
        let root_dst = find_root(dst, &poly, d_p)?;
        let mut basis_src = Vec::with_capacity(d_p);
        let mut basis_dst = Vec::with_capacity(d_p);
        let (mut cs, mut cd) = (src.one(), dst.one());
        for _ in 0..d_p {
            basis_src.push(cs);
            basis_dst.push(cd);
            cs = src.field.mul(cs, root_src);
            cd = dst.field.mul(cd, root_dst);
        }
        let deg = src.field.degree;
        let mut solver = crate::linalg::FpMat::zero(src.p, deg, d_p);
        for (c, &b) in basis_src.iter().enumerate() {
            for (r, &v) in src.field.coeffs(b).iter().enumerate() {
                solver.set(r, c, v);
            }
        }
        Ok(Transport {
            solver,
            basis_src,
            basis_dst,
        })
    }

    pub fn elem(&self, x: FqElem, src: &FieldTower, dst: &FieldTower) -> Result<FqElem> {
        let (coords, _) = self
            .solver
            .solve_affine(&src.field.coeffs(x))
            .ok_or_else(|| Error::InvalidParameter("element outside the subfield".into()))?;
        let mut acc = dst.zero();
        for (c, &b) in self.basis_dst.iter().enumerate() {
            let mut v = coords[c] % dst.p;
            let mut term = b;
            while v > 0 {
                acc = dst.field.add(acc, term);
                v -= 1;
            }
            let _ = &mut term;
        }
        Ok(acc)
    }

    pub fn trunc(
        &self,
        x: &crate::ring::trunc::TruncElem,
        src: &FieldTower,
        dst: &FieldTower,
    ) -> Result<crate::ring::trunc::TruncElem> {
        let coeffs = x
            .coeffs
            .iter()
            .map(|&c| self.elem(c, src, dst))
            .collect::<Result<Vec<_>>>()?;
        Ok(crate::ring::trunc::TruncElem::from_coeffs(coeffs))
    }

    pub fn mat(
        &self,
        m: &crate::linalg::Mat,
        src: &FieldTower,
        dst: &FieldTower,
    ) -> Result<crate::linalg::Mat> {
        let data = m
            .data
            .iter()
            .map(|e| self.trunc(e, src, dst))
            .collect::<Result<Vec<_>>>()?;
        Ok(crate::linalg::Mat {
            rows: m.rows,
            cols: m.cols,
            data,
        })
    }

    #[allow(unused)]
    fn basis_len(&self) -> usize {
        self.basis_src.len()
    }
}

fn find_root(t: &FieldTower, poly: &[u64], d_p: usize) -> Result<FqElem> {
    // roots live in the subfield of q-degree d_p / f (d_p is over F_p)
    assert!(d_p % t.f == 0);
    let dq = d_p / t.f;
    for x in t.subfield_elements(dq) {
        // evaluate poly at x (coefficients in the prime field)
        let mut acc = t.zero();
        for &c in poly.iter().rev() {
            acc = t.field.mul(acc, x);
            let mut v = c % t.p;
            while v > 0 {
                acc = t.field.add(acc, t.one());
                v -= 1;
            }
        }
        if t.field.is_zero(acc) {
            return Ok(x);
        }
    }
    Err(Error::ConsistencyFailure(
        "canonical polynomial has no root in the subfield".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tower_2112() {
        // q=2, n0=1, n'=2, m_max=2: ambient F_{2^4}
        let t = FieldTower::new(2, 1, 1, 2, 2).unwrap();
        assert_eq!(t.ambient_degree, 4);
        assert_eq!(t.field.order, 16);
        // F_4 = fixed field of sigma^2 has exactly 4 elements
        let f4: Vec<_> = t.field.elements().filter(|&x| t.in_subfield(x, 2)).collect();
        assert_eq!(f4.len(), 4);
        assert_eq!(t.subfield_elements(2).len(), 4);
    }

    #[test]
    fn tower_3121() {
        let t = FieldTower::new(3, 1, 1, 2, 1).unwrap();
        assert_eq!(t.field.order, 9);
    }

    #[test]
    fn tower_2221() {
        // n=4 with n0=2: F_4 inside F_16, F_4 = fixed field of x -> x^4
        let t = FieldTower::new(2, 1, 2, 2, 1).unwrap();
        assert_eq!(t.ambient_degree, 4);
        let f4: Vec<_> = t.field.elements().filter(|&x| t.in_subfield(x, 2)).collect();
        assert_eq!(f4.len(), 4);
        for &x in &f4 {
            assert_eq!(t.sigma_pow(x, 2), x);
        }
    }

    #[test]
    fn trace_f4_to_f2() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        // omega: a generator of F_4; trace to F_2 is omega + omega^2 = 1
        let w = t.field.generator();
        let tr = t.trace_to(w, 2, 1).unwrap();
        assert_eq!(tr, t.one());
        // norm to the same field is the identity
        assert_eq!(t.norm_to(w, 2, 2).unwrap(), w);
    }

    #[test]
    fn trace_of_one_counts_degree() {
        // trace_to(1, F_q) from F_{q^n} is n mod p
        let t = FieldTower::new(3, 1, 1, 2, 1).unwrap();
        let tr = t.trace_to(t.one(), 2, 1).unwrap();
        // n = 2 mod 3 => 1 + 1 = 2
        let two = t.field.add(t.one(), t.one());
        assert_eq!(tr, two);
    }

    #[test]
    fn frobenius_fixes_ambient() {
        let t = FieldTower::new(2, 1, 1, 2, 2).unwrap();
        for x in t.field.elements() {
            assert_eq!(t.sigma_pow(x, t.ambient_degree as i64), x);
        }
    }
}
