//! Structure of the unit group of O/pi^h (residue field F_{q^d}) by
//! exhaustive abelian decomposition, with a total discrete log.

use std::collections::HashMap;

use super::tower::FieldTower;
use super::trunc::TruncElem;
use crate::error::{Error, Result};

/// Invariant-style generator decomposition of (O/pi^h)^* with residue field
/// F_{q^d}: every unit is a unique product of generator powers.
pub struct UnitGroupStructure {
    pub h: usize,
    pub residue_degree: usize,
    pub generators: Vec<TruncElem>,
    pub orders: Vec<u64>,
    pub elements: Vec<TruncElem>,
    dlog: HashMap<TruncElem, Vec<u64>>,
}

const UNIT_GROUP_BUDGET: u64 = 1 << 13;

impl UnitGroupStructure {
    /// Enumerates the group and decomposes it. `d` must divide the ambient degree.
    pub fn new(t: &FieldTower, h: usize, d: usize) -> Result<UnitGroupStructure> {
        let qd = (t.q() as u128).checked_pow(d as u32).ok_or_else(|| {
            Error::BudgetExceeded("residue field too large for unit group".into())
        })?;
        let group_order_128 = (qd - 1) * qd.pow((h - 1) as u32);
        if group_order_128 > UNIT_GROUP_BUDGET as u128 {
            return Err(Error::BudgetExceeded(format!(
                "unit group of order {group_order_128} exceeds budget {UNIT_GROUP_BUDGET}"
            )));
        }
        let group_order = group_order_128 as u64;

        let sub = t.subfield_elements(d);
        // all units: first coefficient nonzero, all coefficients in F_{q^d}
        let mut elements = Vec::with_capacity(group_order as usize);
        // iterate coefficient tuples little-endian
        let total = (sub.len() as u64).pow(h as u32);
        for idx in 0..total {
            let mut rest = idx;
            let mut coeffs = Vec::with_capacity(h);
            for _ in 0..h {
                coeffs.push(sub[(rest % sub.len() as u64) as usize]);
                rest /= sub.len() as u64;
            }
            if t.field.is_zero(coeffs[0]) {
                continue;
            }
            elements.push(TruncElem::from_coeffs(coeffs));
        }
        assert_eq!(elements.len() as u64, group_order);

        // element orders via prime factorization of the group order
        let primes = prime_factors(group_order);
        let order_of = |x: &TruncElem| -> u64 {
            let mut o = group_order;
            for &p in &primes {
                while o % p == 0 && x.pow(o / p, t) == TruncElem::one(t, h) {
                    o /= p;
                }
            }
            o
        };

        // greedy decomposition: pick a maximal-order element of the quotient
        // by the subgroup generated so far
        let mut generators: Vec<TruncElem> = Vec::new();
        let mut orders: Vec<u64> = Vec::new();
        let mut subgroup: HashMap<TruncElem, Vec<u64>> = HashMap::new();
        subgroup.insert(TruncElem::one(t, h), Vec::new());
        while (subgroup.len() as u64) < group_order {
            // maximal order in the quotient: smallest k with x^k in subgroup
            let mut best: Option<(u64, TruncElem)> = None;
            for x in &elements {
                if subgroup.contains_key(x) {
                    continue;
                }
                let mut k = 1u64;
                let full = order_of(x);
                // quotient order divides full order; scan divisors in increasing order
                let mut divs: Vec<u64> = divisors(full);
                divs.sort_unstable();
                for dv in divs {
                    if subgroup.contains_key(&x.pow(dv, t)) {
                        k = dv;
                        break;
                    }
                }
                match &best {
                    Some((bk, bx)) if *bk > k || (*bk == k && bx <= x) => {}
                    _ => best = Some((k, x.clone())),
                }
            }
            let (k, g) = best.expect("quotient nontrivial");
            // extend the dlog table: every element of the new subgroup is
            // (old element) * g^e for e < k
            let mut next: HashMap<TruncElem, Vec<u64>> = HashMap::new();
            let mut gp = TruncElem::one(t, h);
            for e in 0..k {
                for (x, exps) in &subgroup {
                    let mut v = exps.clone();
                    v.push(e);
                    next.insert(x.mul(&gp, t), v);
                }
                gp = gp.mul(&g, t);
            }
            generators.push(g);
            orders.push(k);
            subgroup = next;
        }
        // exponents were appended per generator; normalize lengths
        let k = generators.len();
        let mut dlog = HashMap::with_capacity(subgroup.len());
        for (x, mut v) in subgroup {
            v.resize(k, 0);
            dlog.insert(x, v);
        }
        elements.sort();
        Ok(UnitGroupStructure {
            h,
            residue_degree: d,
            generators,
            orders,
            elements,
            dlog,
        })
    }

    pub fn order(&self) -> u64 {
        self.orders.iter().product::<u64>().max(1)
    }

    /// Exponent tuple of a unit against the generators.
    pub fn dlog(&self, x: &TruncElem) -> Option<&Vec<u64>> {
        self.dlog.get(x)
    }

    /// Reconstructs the element with the given exponent tuple.
    pub fn from_exponents(&self, t: &FieldTower, exps: &[u64]) -> TruncElem {
        let mut acc = TruncElem::one(t, self.h);
        for (g, (&e, &o)) in self.generators.iter().zip(exps.iter().zip(&self.orders)) {
            acc = acc.mul(&g.pow(e % o, t), t);
        }
        acc
    }
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_units_h1() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let u = UnitGroupStructure::new(&t, 1, 2).unwrap();
        assert_eq!(u.order(), 3);
        assert_eq!(u.generators.len(), 1);
        assert_eq!(u.orders, vec![3]);
    }

    #[test]
    fn f4_units_h2() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let u = UnitGroupStructure::new(&t, 2, 2).unwrap();
        assert_eq!(u.order(), 12);
        assert_eq!(u.elements.len(), 12);
        // dlog is a bijection onto exponent tuples
        let mut seen = std::collections::HashSet::new();
        for x in &u.elements {
            let e = u.dlog(x).unwrap().clone();
            assert_eq!(&u.from_exponents(&t, &e), x);
            seen.insert(e);
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn dlog_of_generator_powers() {
        let t = FieldTower::new(2, 1, 2, 2, 1).unwrap();
        let u = UnitGroupStructure::new(&t, 2, 4).unwrap();
        // (q^4 - 1) * q^4 = 240
        assert_eq!(u.order(), 240);
        for (i, g) in u.generators.iter().enumerate() {
            let e = u.dlog(g).unwrap();
            for (j, &v) in e.iter().enumerate() {
                assert_eq!(v, if i == j { 1 } else { 0 });
            }
        }
    }
}
