//! Exact arithmetic in cyclotomic integer rings Z[zeta_N], reduced
//! canonically modulo the N-th cyclotomic polynomial.

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// An element of Z[zeta_N] in the basis 1, zeta, ..., zeta^{phi(N)-1}.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Cyclotomic {
    pub order: u64,
    pub coeffs: Vec<BigInt>,
}

fn phi(n: u64) -> u64 {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// Cyclotomic polynomial coefficients, cached.
fn cyclotomic_poly(n: u64) -> Vec<BigInt> {
    static CACHE: Mutex<Option<HashMap<u64, Vec<BigInt>>>> = Mutex::new(None);
    let mut guard = CACHE.lock().unwrap();
    let cache = guard.get_or_insert_with(HashMap::new);
    if let Some(v) = cache.get(&n) {
        return v.clone();
    }
    // Phi_n = (x^n - 1) / prod_{d | n, d < n} Phi_d
    let mut num = vec![BigInt::zero(); n as usize + 1];
    num[0] = -BigInt::one();
    num[n as usize] = BigInt::one();
    for d in 1..n {
        if n % d != 0 {
            continue;
        }
        let phid = if let Some(v) = cache.get(&d) {
            v.clone()
        } else {
            drop_and_fill(cache, d)
        };
        num = poly_div_exact(&num, &phid);
    }
    cache.insert(n, num.clone());
    num
}

fn drop_and_fill(cache: &mut HashMap<u64, Vec<BigInt>>, d: u64) -> Vec<BigInt> {
    // compute Phi_d recursively into the same cache
    let mut num = vec![BigInt::zero(); d as usize + 1];
    num[0] = -BigInt::one();
    num[d as usize] = BigInt::one();
    for e in 1..d {
        if d % e != 0 {
            continue;
        }
        let phie = if let Some(v) = cache.get(&e) {
            v.clone()
        } else {
            drop_and_fill(cache, e)
        };
        num = poly_div_exact(&num, &phie);
    }
    cache.insert(d, num.clone());
    num
}

fn poly_div_exact(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let da = a.len() - 1;
    assert!(b[db].is_one());
    let mut q = vec![BigInt::zero(); da - db + 1];
    for k in (0..=da - db).rev() {
        let c = r[k + db].clone();
        if c.is_zero() {
            continue;
        }
        q[k] = c.clone();
        for (i, bi) in b.iter().enumerate() {
            r[k + i] -= &c * bi;
        }
    }
    assert!(r.iter().all(|x| x.is_zero()), "inexact division");
    q
}

impl Cyclotomic {
    pub fn zero(order: u64) -> Cyclotomic {
        Cyclotomic {
            order,
            coeffs: vec![BigInt::zero(); phi(order) as usize],
        }
    }

    pub fn integer(order: u64, v: i64) -> Cyclotomic {
        let mut c = Self::zero(order);
        c.coeffs[0] = BigInt::from(v);
        c
    }

    pub fn one(order: u64) -> Cyclotomic {
        Self::integer(order, 1)
    }

    /// zeta_order^k.
    pub fn root(order: u64, k: u64) -> Cyclotomic {
        let k = k % order;
        let deg = phi(order) as usize;
        let mut raw = vec![BigInt::zero(); (k as usize + 1).max(deg)];
        raw[k as usize] = BigInt::one();
        Cyclotomic {
            order,
            coeffs: reduce_mod_phi(raw, order),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Lift to a larger order (target must be a multiple).
    pub fn lift(&self, target: u64) -> Cyclotomic {
        assert!(target % self.order == 0);
        if target == self.order {
            return self.clone();
        }
        let k = target / self.order;
        let mut raw = vec![BigInt::zero(); ((self.coeffs.len() - 1) * k as usize) + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            raw[i * k as usize] = c.clone();
        }
        Cyclotomic {
            order: target,
            coeffs: reduce_mod_phi(raw, target),
        }
    }

    fn common(a: &Cyclotomic, b: &Cyclotomic) -> (Cyclotomic, Cyclotomic) {
        if a.order == b.order {
            (a.clone(), b.clone())
        } else {
            let l = num_integer::lcm(a.order, b.order);
            (a.lift(l), b.lift(l))
        }
    }

    pub fn add(&self, other: &Cyclotomic) -> Cyclotomic {
        let (mut a, b) = Self::common(self, other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &Cyclotomic) -> Cyclotomic {
        let (mut a, b) = Self::common(self, other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x -= y;
        }
        a
    }

    pub fn neg(&self) -> Cyclotomic {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &Cyclotomic) -> Cyclotomic {
        let (a, b) = Self::common(self, other);
        let mut raw = vec![BigInt::zero(); a.coeffs.len() + b.coeffs.len()];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                raw[i + j] += x * y;
            }
        }
        Cyclotomic {
            order: a.order,
            coeffs: reduce_mod_phi(raw, a.order),
        }
    }

    pub fn scale(&self, k: i64) -> Cyclotomic {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Galois map zeta -> zeta^k; k must be coprime to the order.
    pub fn galois(&self, k: u64) -> Cyclotomic {
        let k = k % self.order;
        assert!(num_integer::gcd(k, self.order) == 1, "non-unit Galois index");
        let mut raw = vec![BigInt::zero(); self.order as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let j = ((i as u64) * k % self.order) as usize;
            raw[j] += c;
        }
        Cyclotomic {
            order: self.order,
            coeffs: reduce_mod_phi(raw, self.order),
        }
    }

    /// Complex conjugation zeta -> zeta^{-1}.
    pub fn conj(&self) -> Cyclotomic {
        if self.order == 1 {
            return self.clone();
        }
        self.galois(self.order - 1)
    }

    /// The rational integer this element equals, if any.
    pub fn to_integer(&self) -> Option<BigInt> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Exact division by a positive integer.
    pub fn div_exact(&self, d: u64) -> Option<Cyclotomic> {
        let dv = BigInt::from(d);
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            let (q, r) = num_integer::Integer::div_rem(&*c, &dv);
            if !r.is_zero() {
                return None;
            }
            *c = q;
        }
        Some(out)
    }

    pub fn abs_is_one(&self) -> bool {
        match self.to_integer() {
            Some(v) => v.abs().is_one(),
            None => false,
        }
    }
}

fn reduce_mod_phi(mut raw: Vec<BigInt>, order: u64) -> Vec<BigInt> {
    let modulus = cyclotomic_poly(order);
    let deg = modulus.len() - 1;
    // polynomial remainder
    while raw.len() > deg {
        let k = raw.len() - 1;
        let c = raw[k].clone();
        if !c.is_zero() {
            for (i, m) in modulus.iter().enumerate() {
                let idx = k - deg + i;
                raw[idx] -= &c * m;
            }
        }
        raw.pop();
    }
    raw.resize(deg.max(1), BigInt::zero());
    raw
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_sum_to_zero() {
        // full orbit of primitive N-th roots sums to the Moebius value;
        // 1 + zeta + ... + zeta^{N-1} = 0
        for n in [3u64, 4, 6, 12] {
            let mut acc = Cyclotomic::zero(n);
            for k in 0..n {
                acc = acc.add(&Cyclotomic::root(n, k));
            }
            assert!(acc.is_zero(), "n = {n}");
        }
    }

    #[test]
    fn orthogonality_of_characters_of_z3() {
        // sum over the group of chi_a(g) conj(chi_b(g)) = 3 [a = b]
        for a in 0..3u64 {
            for b in 0..3u64 {
                let mut acc = Cyclotomic::zero(3);
                for g in 0..3u64 {
                    let x = Cyclotomic::root(3, a * g % 3);
                    let y = Cyclotomic::root(3, b * g % 3).conj();
                    acc = acc.add(&x.mul(&y));
                }
                let expect = if a == b { 3 } else { 0 };
                assert_eq!(acc.to_integer(), Some(BigInt::from(expect)));
            }
        }
    }

    #[test]
    fn lift_and_mixed_orders() {
        let a = Cyclotomic::root(3, 1);
        let b = Cyclotomic::root(4, 1);
        let prod = a.mul(&b);
        assert_eq!(prod.order, 12);
        // zeta_3 zeta_4 = zeta_12^{4+3} = zeta_12^7
        assert_eq!(prod, Cyclotomic::root(12, 7));
    }

    #[test]
    fn galois_and_conj() {
        let z = Cyclotomic::root(5, 1);
        assert_eq!(z.conj(), Cyclotomic::root(5, 4));
        assert_eq!(z.galois(2), Cyclotomic::root(5, 2));
        // trace of zeta_5 over Q: sum of conjugates = -1
        let mut acc = Cyclotomic::zero(5);
        for k in [1u64, 2, 3, 4] {
            acc = acc.add(&Cyclotomic::root(5, k));
        }
        assert_eq!(acc.to_integer(), Some(BigInt::from(-1)));
    }
}
