//! Characters of T_h = (O_L/pi^h)^* with exact cyclotomic values: Galois
//! action, level and classification, Henniart sign, norm twisting and the
//! Galois-average rigidity test.

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::group::rep::Rep;
use crate::linalg::Mat;
use crate::ring::field::FqElem;
use crate::ring::tower::FieldTower;
use crate::ring::trunc::{norm_to_base, TruncElem};
use crate::ring::units::UnitGroupStructure;

use super::cyclotomic::Cyclotomic;

/// The torus T_h together with everything needed to evaluate and classify
/// its characters.
pub struct TorusData {
    pub h: usize,
    pub n: usize,
    pub units: UnitGroupStructure,
    /// lcm of the generator orders: all character values are N-th roots of unity.
    pub value_order: u64,
}

/// A character of T_h, stored as exponents against the unit-group generators.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct TorusCharacter {
    pub exponents: Vec<u64>,
}

impl TorusData {
    pub fn new(t: &FieldTower, h: usize, n: usize) -> Result<TorusData> {
        let units = UnitGroupStructure::new(t, h, n)?;
        let value_order = units.orders.iter().fold(1u64, |a, &b| a.lcm(&b));
        Ok(TorusData {
            h,
            n,
            units,
            value_order,
        })
    }

    pub fn order(&self) -> u64 {
        self.units.order()
    }

    /// The complete dual group.
    pub fn all_characters(&self) -> Vec<TorusCharacter> {
        let mut out = Vec::with_capacity(self.order() as usize);
        let k = self.units.orders.len();
        let mut exps = vec![0u64; k];
        loop {
            out.push(TorusCharacter {
                exponents: exps.clone(),
            });
            let mut i = 0;
            loop {
                if i == k {
                    return out;
                }
                exps[i] += 1;
                if exps[i] < self.units.orders[i] {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }

    pub fn trivial_char(&self) -> TorusCharacter {
        TorusCharacter {
            exponents: vec![0; self.units.orders.len()],
        }
    }

    pub fn eval(&self, theta: &TorusCharacter, u: &TruncElem) -> Cyclotomic {
        let d = self
            .units
            .dlog(u)
            .unwrap_or_else(|| panic!("element outside the torus"));
        let n = self.value_order;
        let mut e = 0u64;
        for ((&ei, &di), &oi) in theta
            .exponents
            .iter()
            .zip(d.iter())
            .zip(&self.units.orders)
        {
            e = (e + (n / oi) * ((ei as u128 * di as u128 % oi as u128) as u64)) % n;
        }
        Cyclotomic::root(n, e)
    }

    pub fn mul_chars(&self, a: &TorusCharacter, b: &TorusCharacter) -> TorusCharacter {
        TorusCharacter {
            exponents: a
                .exponents
                .iter()
                .zip(&b.exponents)
                .zip(&self.units.orders)
                .map(|((&x, &y), &o)| (x + y) % o)
                .collect(),
        }
    }

    pub fn inv_char(&self, a: &TorusCharacter) -> TorusCharacter {
        TorusCharacter {
            exponents: a
                .exponents
                .iter()
                .zip(&self.units.orders)
                .map(|(&x, &o)| (o - x % o) % o)
                .collect(),
        }
    }

    /// Character determined by its values on the generators, given as
    /// N-th-root exponents; the values must have compatible orders.
    fn char_from_values(&self, value_exps: &[u64]) -> Result<TorusCharacter> {
        let n = self.value_order;
        let mut exps = Vec::with_capacity(value_exps.len());
        for (&w, &o) in value_exps.iter().zip(&self.units.orders) {
            let step = n / o;
            if w % step != 0 {
                return Err(Error::ConsistencyFailure(
                    "character value of incompatible order".into(),
                ));
            }
            exps.push((w / step) % o);
        }
        Ok(TorusCharacter { exponents: exps })
    }

    /// The zeta_N-exponent of theta at a unit.
    fn eval_exponent(&self, theta: &TorusCharacter, u: &TruncElem) -> u64 {
        let d = self.units.dlog(u).expect("element outside the torus");
        let n = self.value_order;
        let mut e = 0u64;
        for ((&ei, &di), &oi) in theta
            .exponents
            .iter()
            .zip(d.iter())
            .zip(&self.units.orders)
        {
            e = (e + (n / oi) * ((ei as u128 * di as u128 % oi as u128) as u64)) % n;
        }
        e
    }

    /// theta^gamma with gamma = sigma^k: theta^gamma(t) = theta(sigma^k t).
    pub fn galois_twist(
        &self,
        theta: &TorusCharacter,
        k: usize,
        t: &FieldTower,
    ) -> TorusCharacter {
        let mut value_exps = Vec::with_capacity(self.units.generators.len());
        for g in &self.units.generators {
            let img = g.sigma(k as i64, t);
            value_exps.push(self.eval_exponent(theta, &img));
        }
        self.char_from_values(&value_exps)
            .expect("Galois twist preserves orders")
    }

    /// Level: smallest h' >= 1 with theta trivial on U^{h'} = 1 + pi^{h'} O_L.
    pub fn level(&self, theta: &TorusCharacter, t: &FieldTower) -> usize {
        for hp in 1..=self.h {
            if self.trivial_on_uh(theta, hp, t) {
                return hp;
            }
        }
        self.h
    }

    fn trivial_on_uh(&self, theta: &TorusCharacter, hp: usize, t: &FieldTower) -> bool {
        if hp >= self.h {
            return true;
        }
        let one = TruncElem::one(t, self.h);
        self.units
            .elements
            .iter()
            .filter(|u| u.sub(&one, t).valuation(t).map_or(true, |v| v >= hp))
            .all(|u| self.char_value_is_one(theta, u))
    }

    fn char_value_is_one(&self, theta: &TorusCharacter, u: &TruncElem) -> bool {
        matches!(self.eval(theta, u).to_integer(), Some(v) if v == num_bigint::BigInt::from(1))
    }

    /// Elements of U^{level} = 1 + pi^{level} O_L inside the torus.
    pub fn uh_subgroup(&self, hp: usize, t: &FieldTower) -> Vec<TruncElem> {
        let one = TruncElem::one(t, self.h);
        self.units
            .elements
            .iter()
            .filter(|u| u.sub(&one, t).valuation(t).map_or(true, |v| v >= hp))
            .cloned()
            .collect()
    }

    /// Does the top-level restriction factor through the subfield trace to
    /// F_{q^r} (h >= 2) or the norm to F_{q^r}^* (h = 1)?
    pub fn top_factors_through(
        &self,
        theta: &TorusCharacter,
        r: usize,
        t: &FieldTower,
    ) -> bool {
        let n = self.n;
        if self.h == 1 {
            // kernel of the norm F_{q^n}^* -> F_{q^r}^*
            for u in &self.units.elements {
                let nm = t.norm_to(u.coeffs[0], n, r).expect("dividing degrees");
                if nm == t.one() && !self.char_value_is_one(theta, u) {
                    return false;
                }
            }
            true
        } else {
            // kernel of the trace F_{q^n} -> F_{q^r}, embedded at the top level
            for a in t.subfield_elements(n) {
                let tr = t.trace_to(a, n, r).expect("dividing degrees");
                if !t.field.is_zero(tr) {
                    continue;
                }
                let u = TruncElem::one(t, self.h)
                    .add(&TruncElem::monomial(t, a, self.h - 1, self.h), t);
                if !self.char_value_is_one(theta, &u) {
                    return false;
                }
            }
            true
        }
    }

    /// Primitive: the top-level restriction factors through no proper
    /// subfield trace (norm at h = 1).
    pub fn is_primitive(&self, theta: &TorusCharacter, t: &FieldTower) -> bool {
        let n = self.n;
        for r in 1..n {
            if n % r == 0 && self.top_factors_through(theta, r, t) {
                return false;
            }
        }
        true
    }

    pub fn general_position(&self, theta: &TorusCharacter, t: &FieldTower) -> bool {
        (1..self.n).all(|k| &self.galois_twist(theta, k, t) != theta)
    }

    /// Levels of theta / theta^gamma for gamma = sigma^k, k = 1..n-1.
    pub fn jump_levels(&self, theta: &TorusCharacter, t: &FieldTower) -> Vec<usize> {
        (1..self.n)
            .map(|k| {
                let tw = self.galois_twist(theta, k, t);
                let quot = self.mul_chars(theta, &self.inv_char(&tw));
                self.level(&quot, t)
            })
            .collect()
    }

    /// Minimal admissible: general position and all Galois quotients share
    /// one level.
    pub fn minimal_admissible(&self, theta: &TorusCharacter, t: &FieldTower) -> bool {
        if !self.general_position(theta, t) {
            return false;
        }
        let lv = self.jump_levels(theta, t);
        lv.iter().all(|&l| l == lv[0])
    }

    /// Is theta|_{U^1} a pullback along the norm to the base (depth-zero class)?
    pub fn depth_zero_class(&self, theta: &TorusCharacter, t: &FieldTower) -> bool {
        // trivial on the kernel of Nm: U^1_L -> U^1_K
        for u in self.uh_subgroup(1, t) {
            let nm = norm_to_base(&u, t);
            let one = TruncElem::one(t, self.h);
            if nm == one {
                match self.eval(theta, &u).to_integer() {
                    Some(v) if v == num_bigint::BigInt::from(1) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Very regular elements: units whose residue generates F_{q^n}^*.
    pub fn very_regular_elements(&self, t: &FieldTower) -> Vec<TruncElem> {
        let full = t.subfield_unit_order(self.n);
        self.units
            .elements
            .iter()
            .filter(|u| {
                let a = u.coeffs[0];
                multiplicative_order(a, full, t) == full
            })
            .cloned()
            .collect()
    }

    /// Units whose residue has trivial Galois stabilizer (weaker than very
    /// regular).
    pub fn trivial_residue_stabilizer(&self, u: &TruncElem, t: &FieldTower) -> bool {
        let a = u.coeffs[0];
        (1..self.n).all(|k| t.sigma_pow(a, k as i64) != a)
    }

    /// Full Galois average sum_{gamma in Gal(L/K)} theta^gamma(x).
    pub fn galois_average(
        &self,
        theta: &TorusCharacter,
        x: &TruncElem,
        t: &FieldTower,
    ) -> Cyclotomic {
        let mut acc = Cyclotomic::zero(self.value_order);
        for k in 0..self.n {
            let xx = x.sigma(k as i64, t);
            acc = acc.add(&self.eval(theta, &xx));
        }
        acc
    }

    /// Partial Galois average over the order-n' subgroup Gal(L/K)[n'].
    pub fn galois_average_subgroup(
        &self,
        theta: &TorusCharacter,
        x: &TruncElem,
        nprime: usize,
        t: &FieldTower,
    ) -> Cyclotomic {
        let n0 = self.n / nprime;
        let mut acc = Cyclotomic::zero(self.value_order);
        for j in 0..nprime {
            let xx = x.sigma((n0 * j) as i64, t);
            acc = acc.add(&self.eval(theta, &xx));
        }
        acc
    }
}

fn multiplicative_order(a: FqElem, group_order: u64, t: &FieldTower) -> u64 {
    if t.field.is_zero(a) {
        return 0;
    }
    let mut o = group_order;
    for p in crate::ring::units::prime_factors(group_order) {
        while o % p == 0 && t.field.pow_u64_elem(a, o / p) == t.one() {
            o /= p;
        }
    }
    o
}

/// Lusztig regularity via the root subtori: for every root alpha of the
/// diagonal torus, the norm N_F^{F^m} of the top-level coroot line (m = the
/// F-orbit length of alpha) must land somewhere theta is nontrivial.
pub fn is_regular_lusztig(
    data: &TorusData,
    theta: &TorusCharacter,
    rep: &Rep,
    t: &FieldTower,
) -> Result<bool> {
    let n = rep.n;
    let h = data.h;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // orbit length of the root (i, j) under the F-shift
            let mut m = 1usize;
            let mut cur = ((i + rep.e) % n, (j + rep.e) % n);
            while cur != (i, j) {
                cur = ((cur.0 + rep.e) % n, (cur.1 + rep.e) % n);
                m += 1;
            }
            // F^m-fixed coroot parameters: c in F_{q^{gcd-driven}} = F_{q^m'}
            // with sigma^m-fixity along the orbit; here the shift is by e so
            // the orbit has length n and c ranges over F_{q^n}
            let mut nontrivial = false;
            let d = {
                let mut a = m;
                let mut b = t.ambient_degree;
                while b != 0 {
                    let r = a % b;
                    a = b;
                    b = r;
                }
                a
            };
            for c in t.subfield_elements(d) {
                debug_assert_eq!(t.sigma_pow(c, m as i64), c);
                // coroot element 1 + pi^{h-1}(c at i, -c at j)
                let mut g = Mat::identity(t, n, h);
                *g.at_mut(i, i) = g
                    .at(i, i)
                    .add(&TruncElem::monomial(t, c, h - 1, h), t);
                *g.at_mut(j, j) = g
                    .at(j, j)
                    .sub(&TruncElem::monomial(t, c, h - 1, h), t);
                // norm t F(t) ... F^{m-1}(t)
                let mut acc = g.clone();
                let mut cur = g.clone();
                for _ in 1..m {
                    cur = rep.twisted_frobenius(&cur, t)?;
                    acc = acc.mul(&cur, t);
                }
                // the result is an F-fixed diagonal D(a)-element: a sits at (0,0)
                let a = acc.at(0, 0).clone();
                debug_assert!(a.is_unit(t));
                match data.eval(theta, &a).to_integer() {
                    Some(v) if v == num_bigint::BigInt::from(1) => {}
                    _ => {
                        nontrivial = true;
                        break;
                    }
                }
            }
            if !nontrivial {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::rep::RepKind;

    #[test]
    fn character_counts() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let d1 = TorusData::new(&t, 1, 2).unwrap();
        assert_eq!(d1.all_characters().len(), 3);
        let d2 = TorusData::new(&t, 2, 2).unwrap();
        assert_eq!(d2.all_characters().len(), 12);
    }

    #[test]
    fn orthogonality_exact() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let d = TorusData::new(&t, 2, 2).unwrap();
        let chars = d.all_characters();
        let sz = d.order();
        for a in &chars {
            for b in &chars {
                let mut acc = Cyclotomic::zero(d.value_order);
                for u in &d.units.elements {
                    acc = acc.add(&d.eval(a, u).mul(&d.eval(b, u).conj()));
                }
                let expect = if a == b { sz as i64 } else { 0 };
                assert_eq!(
                    acc.to_integer(),
                    Some(num_bigint::BigInt::from(expect))
                );
            }
        }
    }

    #[test]
    fn galois_twist_involution_and_level() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let d = TorusData::new(&t, 2, 2).unwrap();
        for theta in d.all_characters() {
            // (theta^sigma)^sigma = theta (n = 2)
            let tw = d.galois_twist(&theta, 1, &t);
            let tw2 = d.galois_twist(&tw, 1, &t);
            assert_eq!(tw2, theta);
            // twisting preserves the level
            assert_eq!(d.level(&theta, &t), d.level(&tw, &t));
        }
    }

    #[test]
    fn primitive_iff_regular_small() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let rep = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        let d = TorusData::new(&t, 2, 2).unwrap();
        let mut prim_count = 0;
        for theta in d.all_characters() {
            let p = d.is_primitive(&theta, &t);
            let r = is_regular_lusztig(&d, &theta, &rep, &t).unwrap();
            assert_eq!(p, r, "theta = {theta:?}");
            if p {
                prim_count += 1;
            }
        }
        assert!(prim_count > 0);
        // the trivial character is neither primitive nor in general position
        let triv = d.trivial_char();
        assert!(!d.is_primitive(&triv, &t));
        assert!(!d.general_position(&triv, &t));
    }

    #[test]
    fn primitive_implies_general_position() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let d = TorusData::new(&t, 2, 2).unwrap();
        for theta in d.all_characters() {
            if d.is_primitive(&theta, &t) {
                assert!(d.general_position(&theta, &t));
            }
        }
    }
}
