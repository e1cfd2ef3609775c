//! The workbench: cached point sets per extension degree, Lefschetz numbers
//! through the counting oracle, virtual characters and exact inner products.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;

use crate::chars::cyclotomic::Cyclotomic;
use crate::chars::torus::{TorusCharacter, TorusData};
use crate::error::{Error, Result};
use crate::fit;
use crate::group::rep::{Rep, RepKind};
use crate::group::table::{mat_key, GroupTable};
use crate::linalg::Mat;
use crate::ring::tower::FieldTower;
use crate::ring::trunc::TruncElem;
use crate::variety::points::{xh_enumerate, EnumStrategy, VarietyPoint, XhSpace};

/// Everything needed to run the verification suites at one parameter set.
pub struct Workbench {
    pub tower: FieldTower,
    pub rep: Rep,
    pub h: usize,
    pub group: GroupTable,
    pub torus: TorusData,
    /// X_h(F_{q^{nm}}) for m = 1..=m_max.
    pub points: Vec<Vec<VarietyPoint>>,
    /// dim X_h = (n-1)(h-1) + (n'-1).
    pub dim: usize,
    pub budget: u64,
}

impl Workbench {
    pub fn new(
        p: u64,
        f: usize,
        n: usize,
        kappa: usize,
        kind: RepKind,
        h: usize,
        m_max: usize,
        budget: u64,
    ) -> Result<Workbench> {
        let rep = Rep::new(n, kappa, kind)?;
        let tower = FieldTower::new(p, f, rep.n0, rep.nprime, m_max)?;
        let group = GroupTable::build(&rep, h, &tower)?;
        let torus = TorusData::new(&tower, h, n)?;
        let dim = (n - 1) * (h - 1) + rep.nprime - 1;
        let mut points = Vec::with_capacity(m_max);
        for m in 1..=m_max {
            points.push(xh_enumerate(
                &rep,
                h,
                m,
                EnumStrategy::Fiber,
                budget,
                &tower,
            )?);
        }
        Ok(Workbench {
            tower,
            rep,
            h,
            group,
            torus,
            points,
            dim,
            budget,
        })
    }

    /// Fixed-point counts of (g, t) for every torus element t at once, per
    /// extension degree m: one pass over the cached points deriving the
    /// unique torus element that could fix each point.
    pub fn fixed_counts_all_t(&self, g: &Mat, m: usize) -> Result<Vec<u64>> {
        let t = &self.tower;
        let rep = &self.rep;
        let h = self.h;
        let space = XhSpace::new(rep, h);
        let torus_index: HashMap<Vec<TruncElem>, usize> = self
            .torus
            .units
            .elements
            .iter()
            .enumerate()
            .map(|(i, u)| (vec![u.clone()], i))
            .collect();
        let pts = &self.points[m - 1];
        let counts: Vec<HashMap<usize, u64>> = pts
            .par_chunks(1024.max(pts.len() / 64 + 1))
            .map(|chunk| {
                let mut local: HashMap<usize, u64> = HashMap::new();
                for p in chunk {
                    let x = space.lift(p, h, t);
                    let gx = g.truncate(h).mul_vec(&x, t);
                    // find a long coordinate where gx is a unit
                    let Some(i0) = (0..rep.n)
                        .find(|&i| i % rep.n0 == 0 && gx[i].is_unit(t))
                    else {
                        continue;
                    };
                    if !x[i0].is_unit(t) {
                        continue;
                    }
                    let tau = match gx[i0].inv(t) {
                        Ok(inv) => x[i0].mul(&inv, t),
                        Err(_) => continue,
                    };
                    // tau must lie in T_h: coefficients in F_{q^n}
                    if !tau.coeffs_in_subfield(rep.n, t) {
                        continue;
                    }
                    // verify at the shape level
                    let gxt: Vec<TruncElem> = gx.iter().map(|e| e.mul(&tau, t)).collect();
                    if &space.project(&gxt, p.m) == p {
                        if let Some(&ti) = torus_index.get(&vec![tau.clone()]) {
                            *local.entry(ti).or_insert(0) += 1;
                        }
                    }
                }
                local
            })
            .collect();
        let mut out = vec![0u64; self.torus.units.elements.len()];
        for local in counts {
            for (ti, c) in local {
                out[ti] += c;
            }
        }
        Ok(out)
    }

    /// Euler characteristic of the fixed locus of (g, t), from the counts
    /// over m = 1..m_max: stabilization, then the plain fit, then the signed
    /// fit. Refusals are surfaced as errors.
    pub fn euler_from_counts(&self, counts: &[BigUint]) -> Result<BigInt> {
        if let Some(v) = fit::stabilized(counts) {
            return Ok(v);
        }
        let qn = BigUint::from(self.tower.q()).pow(self.rep.n as u32);
        if counts.len() >= self.dim + 2 {
            if let Ok(f) = fit::fit_pure(counts, &qn, self.dim) {
                return Ok(f.euler());
            }
        }
        let max_j = self.rep.n * self.dim + 1;
        let f = fit::fit_signed_powers(counts, self.tower.q(), max_j, 1)?;
        Ok(f.euler())
    }

    /// Euler characteristic of the whole space, from level-1 counts in
    /// dedicated per-m towers and the fibration product, which is verified
    /// exactly against the cached enumerations for every in-budget m.
    pub fn full_space_euler(&self) -> Result<BigInt> {
        let p = self.tower.p;
        let f = self.tower.f;
        let q = self.tower.q();
        let max_m = (2 * (self.rep.nprime - 1) * self.rep.n + 4).max(self.points.len());
        let mut counts: Vec<BigUint> = Vec::new();
        for m in 1..=max_m {
            let x1 = crate::variety::counting::count_x1(&self.rep, m, p, f, self.budget)?;
            let total = crate::variety::counting::count_xh_product(&self.rep, self.h, m, x1, q);
            if m <= self.points.len() {
                let cached = BigUint::from(self.points[m - 1].len() as u64);
                if cached != total {
                    return Err(Error::ConsistencyFailure(format!(
                        "fibration product disagrees with enumeration at m = {m}: {total} vs {cached}"
                    )));
                }
            }
            counts.push(total);
            if counts.len() >= 4 {
                let max_j = self.rep.n * self.dim + 1;
                if let Ok(fit) = fit::fit_signed_powers(&counts, q, max_j, 1) {
                    if counts.len() >= fit.terms.len() + 2 {
                        return Ok(fit.euler());
                    }
                }
            }
        }
        let max_j = self.rep.n * self.dim + 1;
        let fit = fit::fit_signed_powers(&counts, q, max_j, 1)?;
        Ok(fit.euler())
    }

    /// Order of a group element (matrix powers until the identity).
    fn mat_order(&self, g: &Mat) -> usize {
        let id = Mat::identity(&self.tower, self.rep.n, self.h);
        let pat = self.rep.pattern(self.h);
        let mut cur = g.clone();
        let mut o = 1;
        while cur != id {
            cur = pat.normalize(&cur.mul(g, &self.tower), &self.tower);
            o += 1;
            assert!(o < 1 << 20, "element order overflow");
        }
        o
    }

    fn unit_order(&self, u: &TruncElem) -> usize {
        let one = TruncElem::one(&self.tower, self.h);
        let mut cur = u.clone();
        let mut o = 1;
        while cur != one {
            cur = cur.mul(u, &self.tower);
            o += 1;
        }
        o
    }

    /// Splits (g, t) into its prime-to-p part s and p-part u inside the
    /// cyclic group it generates.
    fn pair_parts(&self, g: &Mat, tau: &TruncElem) -> PairParts {
        let p = self.tower.p as usize;
        let o = num_integer::lcm(self.mat_order(g), self.unit_order(tau));
        let mut pa = 1usize;
        let mut rest = o;
        while rest % p == 0 {
            rest /= p;
            pa *= p;
        }
        // s = pair^{pa * (pa^{-1} mod rest)}, u = pair^{rest * (rest^{-1} mod pa)}
        let inv_mod = |a: usize, m: usize| -> usize {
            if m == 1 {
                return 0;
            }
            (1..m).find(|&x| (a % m) * x % m == 1).unwrap()
        };
        let ks = pa * inv_mod(pa, rest) % o.max(1);
        let ku = rest * inv_mod(rest, pa) % o.max(1);
        let pat = self.rep.pattern(self.h);
        let pow_mat = |k: usize| -> Mat {
            let mut acc = Mat::identity(&self.tower, self.rep.n, self.h);
            for _ in 0..k {
                acc = pat.normalize(&acc.mul(g, &self.tower), &self.tower);
            }
            acc
        };
        let pow_unit = |k: usize| -> TruncElem {
            let mut acc = TruncElem::one(&self.tower, self.h);
            for _ in 0..k {
                acc = acc.mul(tau, &self.tower);
            }
            acc
        };
        PairParts {
            s_g: pow_mat(ks),
            s_t: pow_unit(ks),
            u_g: pow_mat(ku),
            u_t: pow_unit(ku),
            p_part_order: pa,
        }
    }

    /// Geometric counts of the fixed locus of an explicit pair over the
    /// cached extension degrees.
    fn geometric_counts(&self, g: &Mat, tau: &TruncElem) -> Vec<BigUint> {
        (1..=self.points.len())
            .map(|m| {
                BigUint::from(super::loci::fixed_count_geometric(
                    &self.points[m - 1],
                    g,
                    tau,
                    &self.rep,
                    self.h,
                    &self.tower,
                ))
            })
            .collect()
    }

    /// The true alternating-sum trace of (g, t): the prime-to-p part is
    /// handled by the geometric fixed locus, the p-part by the twisted
    /// counting oracle when the semisimple locus is infinite.
    pub fn pair_trace(&self, g: &Mat, tau: &TruncElem) -> Result<BigInt> {
        let parts = self.pair_parts(g, tau);
        if parts.p_part_order == 1 {
            // p-regular pair: the geometric Euler characteristic is the trace
            let counts = self.geometric_counts(g, tau);
            let full: Vec<BigUint> = self
                .points
                .iter()
                .map(|pts| BigUint::from(pts.len() as u64))
                .collect();
            if counts == full {
                return self.full_space_euler();
            }
            return self.euler_from_counts(&counts);
        }
        // semisimple part fixed locus
        let s_counts = self.geometric_counts(&parts.s_g, &parts.s_t);
        if fit::stabilized(&s_counts).is_some() {
            // finite semisimple locus: the fixed points of the full pair
            // inside it compute the trace exactly
            let full_counts = self.geometric_counts(g, tau);
            return fit::stabilized(&full_counts).ok_or_else(|| {
                Error::ConsistencyFailure(
                    "fixed locus not stabilized inside a finite semisimple locus".into(),
                )
            });
        }
        // infinite semisimple locus: twisted counting of the p-part
        self.twisted_trace(&parts)
    }

    /// Tr(u; H_c(X^s)) via the twisted count sequence and the signed fit.
    fn twisted_trace(&self, parts: &PairParts) -> Result<BigInt> {
        let q = self.tower.q();
        let max_j = self.rep.n * self.dim + 1;
        let mut counts: Vec<BigUint> = Vec::new();
        let s_trivial = {
            let id = Mat::identity(&self.tower, self.rep.n, self.h);
            let one = TruncElem::one(&self.tower, self.h);
            parts.s_g == id && parts.s_t == one
        };
        for m in 1..=7usize {
            let c = self.twisted_count(parts, m, s_trivial)?;
            counts.push(BigUint::from(c));
            if counts.len() >= 4 {
                if let Ok(f) = fit::fit_signed_powers(&counts, q, max_j, 1) {
                    if counts.len() >= f.terms.len() + 2 {
                        return Ok(f.euler());
                    }
                }
            }
        }
        let f = fit::fit_signed_powers(&counts, q, max_j, 1)?;
        Ok(f.euler())
    }

    /// #{x in X^s(closure) : u Fr^m(x) = x} in a dedicated tower.
    fn twisted_count(&self, parts: &PairParts, m: usize, s_trivial: bool) -> Result<u64> {
        let t = &self.tower;
        let d = super::loci::twist_order(&parts.u_g, &parts.u_t, &self.rep, self.h, t)?;
        let ambient = self.rep.n * m * d;
        let t2 = crate::ring::tower::cached_tower(t.p, t.f, self.rep.n0, self.rep.nprime, ambient)?;
        let t2 = t2.as_ref();
        let tr = crate::ring::tower::Transport::new(t, t2, self.rep.n * t.f)?;
        let g2 = tr.mat(&parts.u_g, t, t2)?;
        let tau2 = tr.trunc(&parts.u_t, t, t2)?;
        let sg2 = tr.mat(&parts.s_g, t, t2)?;
        let st2 = tr.trunc(&parts.s_t, t, t2)?;
        let rep = &self.rep;
        let h = self.h;
        let filter_fn = |pt: &VarietyPoint| -> bool {
            &super::loci::apply_action(pt, &sg2, &st2, rep, h, t2) == pt
        };
        let filter: Option<&dyn Fn(&VarietyPoint) -> bool> = if s_trivial {
            None
        } else {
            Some(&filter_fn)
        };
        let (locus, _) = super::loci::twisted_locus_pow(
            &g2,
            &tau2,
            m,
            filter,
            &self.rep,
            self.h,
            t2,
            self.budget,
        )?;
        Ok(locus.len() as u64)
    }

    /// The full Lefschetz table: rows indexed by conjugacy-class
    /// representatives, columns by torus elements.
    pub fn lefschetz_table(&self) -> Result<LefschetzTable> {
        let mut rows = Vec::with_capacity(self.group.classes.len());
        for class in &self.group.classes {
            let g = &self.group.elements[class[0]];
            let row: Vec<BigInt> = self
                .torus
                .units
                .elements
                .iter()
                .map(|tau| self.pair_trace(g, tau))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(LefschetzTable { rows })
    }

    /// chi_theta(g) = (1/|T_h|) sum_t theta(t)^{-1} L(g, t), exact division.
    pub fn virtual_character_table(
        &self,
        table: &LefschetzTable,
        thetas: &[TorusCharacter],
    ) -> Result<Vec<Vec<Cyclotomic>>> {
        let t = &self.tower;
        let order = self.torus.order();
        let mut out = Vec::with_capacity(thetas.len());
        for theta in thetas {
            let mut row = Vec::with_capacity(table.rows.len());
            for l_row in &table.rows {
                let mut acc = Cyclotomic::zero(self.torus.value_order);
                for (u, l) in self.torus.units.elements.iter().zip(l_row) {
                    let v = self.torus.eval(theta, u).conj();
                    acc = acc.add(&v.scale_bigint(l));
                }
                let val = acc.div_exact(order).ok_or_else(|| {
                    Error::ConsistencyFailure("virtual character is not integral".into())
                })?;
                row.push(val);
            }
            let _ = t;
            out.push(row);
        }
        Ok(out)
    }

    /// <R(theta), R(theta')> as an exact rational that must be an integer.
    pub fn inner_product(
        &self,
        chi_theta: &[Cyclotomic],
        chi_theta2: &[Cyclotomic],
    ) -> Result<BigInt> {
        let mut acc = Cyclotomic::zero(self.torus.value_order);
        for ((class, a), b) in self.group.classes.iter().zip(chi_theta).zip(chi_theta2) {
            let term = a.mul(&b.conj()).scale(class.len() as i64);
            acc = acc.add(&term);
        }
        let v = acc
            .div_exact(self.group.order() as u64)
            .ok_or_else(|| Error::ConsistencyFailure("inner product not integral".into()))?;
        v.to_integer()
            .ok_or_else(|| Error::ConsistencyFailure("inner product not rational".into()))
    }

    /// Exact-path trace of a very regular torus element x on R(theta): the
    /// zero-dimensional axis fixed-set computation.
    pub fn trace_very_regular_exact(
        &self,
        theta: &TorusCharacter,
        x: &TruncElem,
    ) -> Result<Cyclotomic> {
        let t = &self.tower;
        if !self.torus.trivial_residue_stabilizer(x, t) {
            return Err(Error::InvalidParameter(
                "element residue has nontrivial Galois stabilizer".into(),
            ));
        }
        let mut acc = Cyclotomic::zero(self.torus.value_order);
        for t2 in &self.torus.units.elements {
            let cnt = super::loci::axis_fixed_count(
                x,
                t2,
                &self.rep,
                self.h,
                &self.torus.units.elements,
                t,
            )?;
            if cnt == 0 {
                continue;
            }
            let v = self.torus.eval(theta, t2).conj().scale(cnt as i64);
            acc = acc.add(&v);
        }
        acc.div_exact(self.torus.order())
            .ok_or_else(|| Error::ConsistencyFailure("trace not integral".into()))
    }

    /// Companion value: the full Galois average over Gal(L/K), assembled from
    /// the subgroup averages through the normalizer lifts.
    pub fn trace_full_average(&self, theta: &TorusCharacter, x: &TruncElem) -> Cyclotomic {
        let t = &self.tower;
        let mut acc = Cyclotomic::zero(self.torus.value_order);
        for i in 0..self.rep.n0 {
            let tw = self.torus.galois_twist(theta, i, t);
            acc = acc.add(&self.torus.galois_average_subgroup(&tw, x, self.rep.nprime, t));
        }
        acc
    }

    /// det g as an element of the base unit group (O_K/pi^h)^*.
    pub fn det_in_base(&self, g: &Mat) -> TruncElem {
        g.det(&self.tower)
    }

    pub fn class_rep(&self, c: usize) -> &Mat {
        &self.group.elements[self.group.classes[c][0]]
    }

    pub fn torus_as_group_indices(&self) -> Vec<usize> {
        self.group.torus.clone()
    }

    pub fn mat_id(&self, g: &Mat) -> Vec<TruncElem> {
        mat_key(g, &self.tower)
    }
}

pub struct LefschetzTable {
    /// rows[class][torus element] = alternating-sum trace of the pair.
    pub rows: Vec<Vec<BigInt>>,
}

/// Prime-to-p and p-power components of a pair (g, t).
struct PairParts {
    s_g: Mat,
    s_t: TruncElem,
    u_g: Mat,
    u_t: TruncElem,
    p_part_order: usize,
}

impl Cyclotomic {
    fn scale_bigint(&self, k: &BigInt) -> Cyclotomic {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workbench_set_a_h1() {
        // q=2, n=2, kappa=0, h=1: the classical case; |chi_theta(1)| = q - 1
        // for theta in general position
        let wb = Workbench::new(2, 1, 2, 0, RepKind::Coxeter, 1, 3, 1 << 22).unwrap();
        assert_eq!(wb.points[0].len(), 6);
        let table = wb.lefschetz_table().unwrap();
        let thetas = wb.torus.all_characters();
        let chars = wb.virtual_character_table(&table, &thetas).unwrap();
        // identity class: find it
        let id_class = wb
            .group
            .classes
            .iter()
            .position(|c| {
                wb.group.elements[c[0]] == Mat::identity(&wb.tower, 2, 1)
            })
            .unwrap();
        let mut gp_count = 0;
        for (theta, row) in thetas.iter().zip(&chars) {
            // Fourier completeness: sum_theta chi_theta(1) = L(1, 1) = chi_c(X_1)
            if wb.torus.general_position(theta, &wb.tower) {
                gp_count += 1;
                let deg = row[id_class].to_integer().unwrap();
                assert_eq!(
                    deg.magnitude().to_u64_digits(),
                    vec![1],
                    "degree of the virtual character is q - 1 = 1, got {deg}"
                );
            }
        }
        assert_eq!(gp_count, 2);
        // Fourier completeness at the identity
        let mut sum = Cyclotomic::zero(wb.torus.value_order);
        for row in &chars {
            sum = sum.add(&row[id_class]);
        }
        assert_eq!(sum.to_integer(), Some(BigInt::from(-3)));
    }

    #[test]
    fn orthogonality_set_a_h1() {
        let wb = Workbench::new(2, 1, 2, 0, RepKind::Coxeter, 1, 3, 1 << 22).unwrap();
        let table = wb.lefschetz_table().unwrap();
        let thetas = wb.torus.all_characters();
        let chars = wb.virtual_character_table(&table, &thetas).unwrap();
        for (i, a) in thetas.iter().enumerate() {
            if !wb.torus.is_primitive(a, &wb.tower) {
                continue;
            }
            for (j, b) in thetas.iter().enumerate() {
                let ip = wb.inner_product(&chars[i], &chars[j]).unwrap();
                // orbit count: #{gamma: a^gamma = b}
                let orbit = (0..2)
                    .filter(|&k| &wb.torus.galois_twist(a, k, &wb.tower) == b)
                    .count();
                assert_eq!(ip, BigInt::from(orbit), "({i},{j})");
            }
        }
    }
}
