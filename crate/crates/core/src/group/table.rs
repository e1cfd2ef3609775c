//! Enumeration of the finite parahoric quotient G_h as the twisted-Frobenius
//! fixed points of the pattern group, with its torus, kernels and classes.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::ring::tower::FieldTower;
use crate::ring::trunc::TruncElem;
use crate::ring::units::UnitGroupStructure;

use super::rep::Rep;

const GROUP_BUDGET: u64 = 1 << 21;

/// Fully tabulated G_h: elements, index lookup, torus, classes.
pub struct GroupTable {
    pub h: usize,
    pub elements: Vec<Mat>,
    index: HashMap<Vec<TruncElem>, usize>,
    /// T_h as indices into `elements`, in bijection with the unit group of
    /// O_L/pi^h via `torus_units` (Coxeter kind).
    pub torus: Vec<usize>,
    pub torus_units: Vec<TruncElem>,
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<usize>,
}

/// Hash key of a matrix: its entry vector (canonical per tower).
pub fn mat_key(g: &Mat, _t: &FieldTower) -> Vec<TruncElem> {
    g.data.clone()
}

/// All F-fixed pattern matrices, enumerated orbit-by-orbit on coefficient
/// slots: F permutes the slots, so fixed points are products of subfield
/// choices along slot orbits.
pub fn enumerate_fixed_pattern(rep: &Rep, h: usize, t: &FieldTower) -> Result<Vec<Mat>> {
    let n = rep.n;
    let pat = rep.pattern(h);
    // slot = (i, j, level). F maps slot (i,j,l) -> (perm i, perm j, l + d).
    let mono = &rep.monomial;
    let mut slots: Vec<(usize, usize, usize)> = Vec::new();
    let mut slot_id: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for i in 0..n {
        for j in 0..n {
            for l in pat.floor(i, j)..pat.prec(i, j) {
                slot_id.insert((i, j, l), slots.len());
                slots.push((i, j, l));
            }
        }
    }
    let next = |s: (usize, usize, usize)| -> (usize, usize, usize) {
        let (i, j, l) = s;
        let d = mono.pexp[i] - mono.pexp[j];
        let nl = (l as i64 + d) as usize;
        (mono.perm[i], mono.perm[j], nl)
    };
    // orbits
    let mut seen = vec![false; slots.len()];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for s0 in 0..slots.len() {
        if seen[s0] {
            continue;
        }
        let mut orbit = vec![s0];
        seen[s0] = true;
        let mut cur = next(slots[s0]);
        while cur != slots[s0] {
            let id = *slot_id
                .get(&cur)
                .ok_or_else(|| Error::ConsistencyFailure("slot orbit left the pattern".into()))?;
            seen[id] = true;
            orbit.push(id);
            cur = next(cur);
        }
        orbits.push(orbit);
    }
    // free choice per orbit: c with sigma^{len}(c) = c, i.e. c in F_{q^{gcd(len, ambient)}}
    let mut total: u64 = 1;
    let mut orbit_choices: Vec<Vec<crate::ring::field::FqElem>> = Vec::new();
    for orbit in &orbits {
        let len = orbit.len();
        let d = gcd(len, t.ambient_degree);
        let choices = t.subfield_elements(d);
        total = total.saturating_mul(choices.len() as u64);
        orbit_choices.push(choices);
    }
    if total > GROUP_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "fixed pattern space of size {total} exceeds budget {GROUP_BUDGET}"
        )));
    }
    // enumerate the product
    let mut out = Vec::new();
    let k = orbits.len();
    let mut digits = vec![0usize; k];
    loop {
        let mut g = Mat::zero(t, n, n, h);
        for (oi, orbit) in orbits.iter().enumerate() {
            let mut c = orbit_choices[oi][digits[oi]];
            for &sid in orbit {
                let (i, j, l) = slots[sid];
                g.at_mut(i, j).coeffs[l] = c;
                c = t.sigma(c);
            }
        }
        out.push(g);
        let mut i = 0;
        loop {
            if i == k {
                return Ok(out);
            }
            digits[i] += 1;
            if digits[i] < orbit_choices[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl GroupTable {
    /// Enumerates G_h for the representative, checking the cardinality
    /// invariant |G_h| = |GL_{n'}(F_{q^{n0}})| q^{n^2 (h-1)}.
    pub fn build(rep: &Rep, h: usize, t: &FieldTower) -> Result<GroupTable> {
        let fixed = enumerate_fixed_pattern(rep, h, t)?;
        let pat = rep.pattern(h);
        let mut elements = Vec::new();
        for g in fixed {
            if g.det(t).is_unit(t) {
                elements.push(g);
            }
        }
        // deterministic order
        elements.sort_by(|a, b| a.data.cmp(&b.data));
        let expected = expected_order(rep, h, t.q());
        if elements.len() as u64 != expected {
            return Err(Error::ConsistencyFailure(format!(
                "|G_h| = {} but the invariant predicts {}",
                elements.len(),
                expected
            )));
        }
        let index: HashMap<Vec<TruncElem>, usize> = elements
            .iter()
            .enumerate()
            .map(|(i, g)| (mat_key(g, t), i))
            .collect();

        // torus: diagonal elements; Coxeter kind gets the unit-group bijection
        let mut torus = Vec::new();
        let mut torus_units = Vec::new();
        match rep.kind {
            super::rep::RepKind::Coxeter => {
                let units = UnitGroupStructure::new(t, h, rep.n)?;
                for u in &units.elements {
                    let d = rep.diag_embed(u, t);
                    let d = pat.normalize(&d, t);
                    let idx = index.get(&mat_key(&d, t)).copied().ok_or_else(|| {
                        Error::ConsistencyFailure("torus element missing from G_h".into())
                    })?;
                    torus.push(idx);
                    torus_units.push(u.clone());
                }
            }
            super::rep::RepKind::Special => {
                for (i, g) in elements.iter().enumerate() {
                    let diag = (0..rep.n).all(|r| {
                        (0..rep.n).all(|c| r == c || g.at(r, c).is_zero(t))
                    });
                    if diag {
                        torus.push(i);
                        torus_units.push(g.at(0, 0).clone());
                    }
                }
            }
        }

        // conjugacy classes
        let m = elements.len();
        let mut class_of = vec![usize::MAX; m];
        let mut classes = Vec::new();
        let inverses: Vec<Mat> = elements.iter().map(|g| g.inv(t).unwrap()).collect();
        for i in 0..m {
            if class_of[i] != usize::MAX {
                continue;
            }
            let cid = classes.len();
            let mut class = Vec::new();
            // orbit of i under conjugation
            let mut stack = vec![i];
            class_of[i] = cid;
            while let Some(x) = stack.pop() {
                class.push(x);
                for (gi, g) in elements.iter().enumerate() {
                    let conj = g.mul(&elements[x], t).mul(&inverses[gi], t);
                    let conj = pat.normalize(&conj, t);
                    let y = *index.get(&mat_key(&conj, t)).ok_or_else(|| {
                        Error::ConsistencyFailure("conjugation left the group".into())
                    })?;
                    if class_of[y] == usize::MAX {
                        class_of[y] = cid;
                        stack.push(y);
                    }
                }
            }
            class.sort_unstable();
            classes.push(class);
        }

        Ok(GroupTable {
            h,
            elements,
            index,
            torus,
            torus_units,
            classes,
            class_of,
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn lookup(&self, g: &Mat, t: &FieldTower) -> Option<usize> {
        self.index.get(&mat_key(g, t)).copied()
    }

    /// Index of ker(G_h -> G_a): elements congruent to the identity at the
    /// pattern precision of level a.
    pub fn kernel_to_level(&self, rep: &Rep, a: usize, t: &FieldTower) -> Vec<usize> {
        assert!(a <= self.h);
        let pat_a = rep.pattern(a);
        let id = Mat::identity(t, rep.n, self.h);
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, g)| {
                let diff = (*g).sub(&id, t);
                (0..rep.n).all(|i| {
                    (0..rep.n).all(|j| {
                        let e = diff.at(i, j);
                        (0..pat_a.prec(i, j).min(self.h))
                            .all(|l| t.field.is_zero(e.coeffs[l]))
                    })
                })
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// det: G_h -> (O_K/pi^h)^* for an element index.
    pub fn det_of(&self, i: usize, t: &FieldTower) -> TruncElem {
        self.elements[i].det(t)
    }
}

pub fn expected_order(rep: &Rep, h: usize, q: u64) -> u64 {
    let n = rep.n as u32;
    let npr = rep.nprime as u32;
    let qn0 = q.pow(rep.n0 as u32);
    // |GL_{n'}(F_{q^{n0}})|
    let mut gl = 1u64;
    for i in 0..npr {
        gl *= qn0.pow(npr) - qn0.pow(i);
    }
    gl * q.pow(n * n * (h as u32 - 1))
}

/// Exported summary used by the CLI.
#[derive(Serialize)]
pub struct GroupExport {
    pub order: usize,
    pub generators: Vec<Vec<String>>,
    pub class_sizes: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::rep::RepKind;

    #[test]
    fn gl2_f2_order() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let rep = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        let g = GroupTable::build(&rep, 1, &t).unwrap();
        assert_eq!(g.order(), 6);
        // brute-force oracle: all invertible 2x2 matrices over F_2 fixed by F
        let mut brute = 0;
        for a in 0..2u64 {
            for b in 0..2u64 {
                for c in 0..2u64 {
                    for d in 0..2u64 {
                        if (a * d + b * c) % 2 == 1 {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(brute, 6);
    }

    #[test]
    fn g2_order_96() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let rep = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        let g = GroupTable::build(&rep, 2, &t).unwrap();
        assert_eq!(g.order(), 96);
        // torus has (q^n - 1) q^{n(h-1)} = 12 elements
        assert_eq!(g.torus.len(), 12);
        // class sizes partition the group
        assert_eq!(g.classes.iter().map(|c| c.len()).sum::<usize>(), 96);
        // kernel of reduction to level 1
        assert_eq!(g.kernel_to_level(&rep, 1, &t).len(), 16);
    }

    #[test]
    fn torus_of_kappa_1() {
        let t = FieldTower::new(2, 1, 2, 1, 1).unwrap();
        let rep = Rep::new(2, 1, RepKind::Coxeter).unwrap();
        let g = GroupTable::build(&rep, 1, &t).unwrap();
        // G_1 for the division algebra: |GL_1(F_4)| = 3
        assert_eq!(g.order(), 3);
        assert_eq!(g.torus.len(), 3);
    }
}
