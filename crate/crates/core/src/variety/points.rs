//! Points of X_h: coordinate shape, membership, and the two enumeration
//! strategies (brute force and fiber recursion).


use crate::error::{Error, Result};
use crate::linalg::FpMat;
use crate::ring::field::FqElem;
use crate::ring::tower::FieldTower;
use crate::ring::trunc::TruncElem;

use crate::group::rep::Rep;

use super::gmatrix::{self, Admissibility};

/// A point of X_h over F_{q^{nm}}: flattened coordinates x_{i,l}, where
/// coordinate i (0-based) carries h coefficients when i = 0 mod n0 and h-1
/// otherwise, all in F_{q^{nm}}.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VarietyPoint {
    pub coords: Vec<FqElem>,
    pub m: usize,
}

/// Coordinate bookkeeping for one level-h space.
#[derive(Clone, Copy)]
pub struct XhSpace {
    pub n: usize,
    pub n0: usize,
    pub h: usize,
}

impl XhSpace {
    pub fn new(rep: &Rep, h: usize) -> XhSpace {
        XhSpace {
            n: rep.n,
            n0: rep.n0,
            h,
        }
    }

    /// Number of coefficients of coordinate i.
    pub fn coord_len(&self, i: usize) -> usize {
        if i % self.n0 == 0 {
            self.h
        } else {
            self.h - 1
        }
    }

    /// Total number of affine coordinates: n(h-1) + n'.
    pub fn total_len(&self) -> usize {
        (0..self.n).map(|i| self.coord_len(i)).sum()
    }

    /// Offset of coordinate i in the flattened vector.
    pub fn offset(&self, i: usize) -> usize {
        (0..i).map(|k| self.coord_len(k)).sum()
    }

    /// Lifts a point to truncated-ring coordinates at precision h_w >= h,
    /// zero-extending beyond the defined coefficients.
    pub fn lift(&self, p: &VarietyPoint, h_w: usize, t: &FieldTower) -> Vec<TruncElem> {
        assert!(h_w >= self.h);
        let mut out = Vec::with_capacity(self.n);
        let mut off = 0;
        for i in 0..self.n {
            let len = self.coord_len(i);
            let mut coeffs = vec![t.zero(); h_w];
            coeffs[..len].copy_from_slice(&p.coords[off..off + len]);
            out.push(TruncElem::from_coeffs(coeffs));
            off += len;
        }
        out
    }

    /// Projects truncated coordinates to a point (coefficients beyond the
    /// defined range are dropped).
    pub fn project(&self, x: &[TruncElem], m: usize) -> VarietyPoint {
        let mut coords = Vec::with_capacity(self.total_len());
        for (i, e) in x.iter().enumerate() {
            coords.extend_from_slice(&e.coeffs[..self.coord_len(i)]);
        }
        VarietyPoint { coords, m }
    }
}

/// Required working precision for level-h membership.
pub fn membership_precision(rep: &Rep, h: usize) -> usize {
    h + rep.dkn_exp(rep.n - 1)
}

/// Membership in X_h(F_{q^{nm}}): the point's reduced determinant is a unit
/// with all coefficients in F_q. Coordinates must lie in F_{q^{nm}}.
pub fn xh_membership(p: &VarietyPoint, rep: &Rep, h: usize, t: &FieldTower) -> Result<bool> {
    let space = XhSpace::new(rep, h);
    let x = space.lift(p, membership_precision(rep, h), t);
    Ok(matches!(
        gmatrix::admissibility(&x, rep, h, t)?,
        Admissibility::RationalAdmissible
    ))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EnumStrategy {
    Brute,
    Fiber,
}

/// Enumerates X_h(F_{q^{nm}}) inside the ambient tower. Both strategies
/// return the same canonically sorted point list.
pub fn xh_enumerate(
    rep: &Rep,
    h: usize,
    m: usize,
    strategy: EnumStrategy,
    budget: u64,
    t: &FieldTower,
) -> Result<Vec<VarietyPoint>> {
    match strategy {
        EnumStrategy::Brute => brute_enumerate(rep, h, m, budget, t),
        EnumStrategy::Fiber => fiber_enumerate(rep, h, m, budget, t),
    }
}

fn field_of_m(rep: &Rep, m: usize, t: &FieldTower) -> Result<Vec<FqElem>> {
    let d = rep.n * m;
    if t.ambient_degree % d != 0 {
        return Err(Error::InvalidParameter(format!(
            "extension degree {m} outside the tower (ambient degree {})",
            t.ambient_degree
        )));
    }
    Ok(t.subfield_elements(d))
}

fn brute_enumerate(
    rep: &Rep,
    h: usize,
    m: usize,
    budget: u64,
    t: &FieldTower,
) -> Result<Vec<VarietyPoint>> {
    let space = XhSpace::new(rep, h);
    let elems = field_of_m(rep, m, t)?;
    let dim = space.total_len();
    let total = (elems.len() as f64).powi(dim as i32);
    if total > budget as f64 {
        return Err(Error::BudgetExceeded(format!(
            "brute enumeration needs {total:.3e} evaluations (budget {budget})"
        )));
    }
    let mut out = Vec::new();
    let mut digits = vec![0usize; dim];
    loop {
        let coords: Vec<FqElem> = digits.iter().map(|&d| elems[d]).collect();
        let p = VarietyPoint { coords, m };
        if xh_membership(&p, rep, h, t)? {
            out.push(p);
        }
        let mut i = 0;
        loop {
            if i == dim {
                out.sort();
                return Ok(out);
            }
            digits[i] += 1;
            if digits[i] < elems.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Fiber recursion: enumerate X_1 brute-force over the n' residue
/// coordinates, then extend level by level solving the affine condition on
/// the new top coordinates.
fn fiber_enumerate(
    rep: &Rep,
    h: usize,
    m: usize,
    budget: u64,
    t: &FieldTower,
) -> Result<Vec<VarietyPoint>> {
    let elems = field_of_m(rep, m, t)?;
    // level 1: n' coordinates
    let space1 = XhSpace::new(rep, 1);
    let npr = rep.nprime;
    let total1 = (elems.len() as f64).powi(npr as i32);
    if total1 > budget as f64 {
        return Err(Error::BudgetExceeded(format!(
            "level-1 base needs {total1:.3e} evaluations (budget {budget})"
        )));
    }
    let mut level: Vec<VarietyPoint> = Vec::new();
    let mut digits = vec![0usize; npr];
    'outer: loop {
        let coords: Vec<FqElem> = digits.iter().map(|&d| elems[d]).collect();
        let p = VarietyPoint { coords, m };
        if xh_membership(&p, rep, 1, t)? {
            level.push(p);
        }
        let mut i = 0;
        loop {
            if i == npr {
                break 'outer;
            }
            digits[i] += 1;
            if digits[i] < elems.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
    debug_assert_eq!(space1.total_len(), npr);
    for lvl in 2..=h {
        let est = level.len() as f64 * (elems.len() as f64).powi((rep.n - npr) as i32);
        if est > budget as f64 {
            return Err(Error::BudgetExceeded(format!(
                "level-{lvl} extension needs {est:.3e} fiber solves"
            )));
        }
        level = extend_level(rep, lvl, m, &level, &elems, t)?;
    }
    level.sort();
    Ok(level)
}

/// Extends all points of X_{lvl-1} to X_lvl: the free coordinates
/// x_{i,lvl-2} (i not 0 mod n0) range over the field, and the top
/// coordinates x_{i,lvl-1} (i = 0 mod n0) solve an affine condition.
fn extend_level(
    rep: &Rep,
    lvl: usize,
    m: usize,
    base: &[VarietyPoint],
    elems: &[FqElem],
    t: &FieldTower,
) -> Result<Vec<VarietyPoint>> {
    let npr = rep.nprime;
    let free = rep.n - npr;
    let mut out = Vec::new();
    let solver = FiberSolver::new(rep, lvl, m, t)?;
    let space_prev = XhSpace::new(rep, lvl - 1);
    let space_new = XhSpace::new(rep, lvl);
    let mut free_digits = vec![0usize; free];
    for b in base {
        // embed the previous point into the new coordinate shape
        loop {
            // free coordinates at level lvl-2 for i != 0 mod n0
            let mut coords = vec![t.zero(); space_new.total_len()];
            // copy old coords
            for i in 0..rep.n {
                let off_old = space_prev.offset(i);
                let off_new = space_new.offset(i);
                let len_old = space_prev.coord_len(i);
                coords[off_new..off_new + len_old]
                    .copy_from_slice(&b.coords[off_old..off_old + len_old]);
            }
            // fill the free coordinates
            let mut fi = 0;
            for i in 0..rep.n {
                if i % rep.n0 != 0 {
                    let off = space_new.offset(i) + space_new.coord_len(i) - 1;
                    coords[off] = elems[free_digits[fi]];
                    fi += 1;
                }
            }
            // solve for the top coordinates
            let pt = VarietyPoint { coords, m };
            for solved in solver.solve_with(rep, &pt, t)? {
                out.push(solved);
            }
            // advance free counter
            let mut i = 0;
            loop {
                if i == free {
                    break;
                }
                free_digits[i] += 1;
                if free_digits[i] < elems.len() {
                    break;
                }
                free_digits[i] = 0;
                i += 1;
            }
            if free_digits.iter().all(|&d| d == 0) {
                break;
            }
        }
    }
    Ok(out)
}

/// Solves the top-coordinate condition on one fiber: the level-(lvl-1)
/// coefficient of the reduced determinant must lie in F_q. The dependence on
/// the top coordinates is F_p-affine; the solver extracts it by evaluation.
pub struct FiberSolver {
    lvl: usize,
    /// F_p-basis of F_{q^{nm}} inside the ambient field.
    basis: Vec<FqElem>,
    /// coordinates of an ambient element against `basis`.
    coords_mat: FpMat,
}

impl FiberSolver {
    pub fn new(rep: &Rep, lvl: usize, m: usize, t: &FieldTower) -> Result<FiberSolver> {
        let d = rep.n * m;
        let nf = d * t.f;
        let gen = t.subfield_generator(d);
        let mut basis = Vec::with_capacity(nf);
        let mut cur = t.one();
        for _ in 0..nf {
            basis.push(cur);
            cur = t.field.mul(cur, gen);
        }
        let deg = t.field.degree;
        let mut coords_mat = FpMat::zero(t.p, deg, nf);
        for (c, &b) in basis.iter().enumerate() {
            for (r, &v) in t.field.coeffs(b).iter().enumerate() {
                coords_mat.set(r, c, v);
            }
        }
        let _ = m;
        Ok(FiberSolver {
            lvl,
            basis,
            coords_mat,
        })
    }

    fn field_coords(&self, x: FqElem, t: &FieldTower) -> Vec<u64> {
        let rhs = t.field.coeffs(x);
        self.coords_mat
            .solve_affine(&rhs)
            .expect("element not in the subfield")
            .0
    }

    /// The level-(lvl-1) coefficient of det g_red at a given assignment of
    /// top coordinates.
    fn p0(
        &self,
        rep: &Rep,
        base: &VarietyPoint,
        tops: &[FqElem],
        t: &FieldTower,
    ) -> Result<FqElem> {
        let space = XhSpace::new(rep, self.lvl);
        let mut pt = base.clone();
        for (j, &z) in tops.iter().enumerate() {
            let i = rep.n0 * j;
            let off = space.offset(i) + self.lvl - 1;
            pt.coords[off] = z;
        }
        let x = space.lift(&pt, membership_precision(rep, self.lvl), t);
        let det = gmatrix::reduced_det(&x, rep, self.lvl, t)?;
        Ok(det.coeffs[self.lvl - 1])
    }

    /// All extensions of the base point to level lvl. The base must carry the
    /// new coordinate shape with zero top coordinates.
    pub fn solve_with(
        &self,
        rep: &Rep,
        base: &VarietyPoint,
        t: &FieldTower,
    ) -> Result<Vec<VarietyPoint>> {
        let npr = rep.nprime;
        let nf = self.basis.len();
        let p = t.p;
        let zero_tops = vec![t.zero(); npr];
        let c0 = self.p0(rep, base, &zero_tops, t)?;
        // base point must already satisfy the lower-level conditions
        // linear map: for each top coordinate j and basis direction c:
        // L(e_{j,c}) = p0(delta) - c0
        let mut lmat: Vec<Vec<FqElem>> = Vec::with_capacity(npr * nf);
        for j in 0..npr {
            for c in 0..nf {
                let mut tops = zero_tops.clone();
                tops[j] = self.basis[c];
                let v = self.p0(rep, base, &tops, t)?;
                lmat.push(vec![t.field.sub(v, c0)]);
            }
        }
        // condition: (L(z) + c0)^q = L(z) + c0, i.e. M(z) = c0^q - c0 with
        // M(z) = L(z) - L(z)^q. Solve over F_p in subfield coordinates.
        let dim = npr * nf;
        let mut m = FpMat::zero(p, nf, dim);
        for (col, lv) in lmat.iter().enumerate() {
            let lval = lv[0];
            let mval = t.field.sub(lval, t.sigma(lval));
            for (r, &v) in self.field_coords(mval, t).iter().enumerate() {
                m.set(r, col, v);
            }
        }
        let rhs_val = t.field.sub(t.sigma(c0), c0);
        let rhs = self.field_coords(rhs_val, t);
        let Some((part, kernel)) = m.solve_affine(&rhs) else {
            return Ok(Vec::new());
        };
        // enumerate all solutions
        let space = XhSpace::new(rep, self.lvl);
        let mut out = Vec::new();
        let assemble = |coords: &[u64], out: &mut Vec<VarietyPoint>| {
            let mut tops = vec![t.zero(); npr];
            for (j, tz) in tops.iter_mut().enumerate() {
                let mut acc = t.zero();
                for (c, &b) in self.basis.iter().enumerate() {
                    let v = coords[j * nf + c] % p;
                    for _ in 0..v {
                        acc = t.field.add(acc, b);
                    }
                }
                *tz = acc;
            }
            let mut pt = base.clone();
            for (j, &z) in tops.iter().enumerate() {
                let off = space.offset(rep.n0 * j) + self.lvl - 1;
                pt.coords[off] = z;
            }
            out.push(pt);
        };
        let k = kernel.len();
        let mut digits = vec![0u64; k];
        loop {
            let mut coords = part.clone();
            for (vi, &d) in digits.iter().enumerate() {
                if d == 0 {
                    continue;
                }
                for (c, &kv) in kernel[vi].iter().enumerate() {
                    coords[c] = (coords[c] + d * kv) % p;
                }
            }
            assemble(&coords, &mut out);
            let mut i = 0;
            loop {
                if i == k {
                    return Ok(out);
                }
                digits[i] += 1;
                if digits[i] < p {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::rep::RepKind;

    #[test]
    fn x1_count_special_n2() {
        // q=2, n=2, kappa=0: #X_1(F_4) = 6, #X_1(F_16) = 6
        let t = FieldTower::new(2, 1, 1, 2, 2).unwrap();
        let rep = Rep::new(2, 0, RepKind::Special).unwrap();
        let pts1 = xh_enumerate(&rep, 1, 1, EnumStrategy::Brute, 1 << 20, &t).unwrap();
        assert_eq!(pts1.len(), 6);
        let pts2 = xh_enumerate(&rep, 1, 2, EnumStrategy::Brute, 1 << 20, &t).unwrap();
        assert_eq!(pts2.len(), 6);
    }

    #[test]
    fn x1_count_coxeter_matches_special() {
        let t = FieldTower::new(2, 1, 1, 2, 2).unwrap();
        let sp = Rep::new(2, 0, RepKind::Special).unwrap();
        let cox = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        for m in 1..=2 {
            let a = xh_enumerate(&sp, 1, m, EnumStrategy::Brute, 1 << 20, &t).unwrap();
            let b = xh_enumerate(&cox, 1, m, EnumStrategy::Brute, 1 << 20, &t).unwrap();
            assert_eq!(a.len(), b.len(), "m = {m}");
        }
    }

    #[test]
    fn x2_brute_equals_fiber_set_a() {
        // q=2, n=2, kappa=0, h=2, m=1: both strategies byte-identical
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let rep = Rep::new(2, 0, RepKind::Special).unwrap();
        let brute = xh_enumerate(&rep, 2, 1, EnumStrategy::Brute, 1 << 22, &t).unwrap();
        let fiber = xh_enumerate(&rep, 2, 1, EnumStrategy::Fiber, 1 << 22, &t).unwrap();
        assert_eq!(brute, fiber);
        assert_eq!(brute.len(), 96);
    }

    #[test]
    fn x1_division_algebra_is_torus() {
        // n=2, kappa=1 (n'=1), h=1, m=1: X_1 = F_{q^2}^x, 3 points
        let t = FieldTower::new(2, 1, 2, 1, 1).unwrap();
        let rep = Rep::new(2, 1, RepKind::Coxeter).unwrap();
        let pts = xh_enumerate(&rep, 1, 1, EnumStrategy::Brute, 1 << 16, &t).unwrap();
        assert_eq!(pts.len(), 3);
    }

    #[test]
    fn membership_independent_of_lift() {
        // the level-h determinant must not depend on coefficients beyond the
        // defined coordinate ranges (n0 = 2: odd coordinates are short)
        let t = FieldTower::new(2, 1, 2, 2, 1).unwrap();
        let rep = Rep::new(4, 2, RepKind::Special).unwrap();
        let h = 2;
        let space = XhSpace::new(&rep, h);
        assert_eq!(space.total_len(), 4 * (h - 1) + 2);
        let g = t.field.generator();
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            t.field.element_from_u64((state >> 40) % 16)
        };
        let mut checked = 0;
        for _ in 0..200 {
            let coords: Vec<FqElem> = (0..space.total_len()).map(|_| next()).collect();
            let p = VarietyPoint { coords, m: 1 };
            let x0 = space.lift(&p, membership_precision(&rep, h), &t);
            let d0 = super::gmatrix::reduced_det(&x0, &rep, h, &t).unwrap();
            // perturb the padded pi^{h-1} slot of a short coordinate and the
            // pi^h slots of the long ones
            let mut x1 = x0.clone();
            x1[1].coeffs[h - 1] = g;
            x1[3].coeffs[h - 1] = t.field.mul(g, g);
            if x1[0].precision() > h {
                x1[0].coeffs[h] = g;
            }
            let d1 = super::gmatrix::reduced_det(&x1, &rep, h, &t).unwrap();
            assert_eq!(d0, d1);
            checked += 1;
        }
        assert!(checked > 0);
    }
}
