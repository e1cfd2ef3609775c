//! Schubert-cell reduction of admissible matrices (special kind): the
//! block-pivot elimination bringing g_b^red(x) to the monomial normal form,
//! recording the pivot residues.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::ring::field::FqElem;
use crate::ring::tower::FieldTower;
use crate::ring::trunc::TruncElem;

use crate::group::rep::{Rep, RepKind};

use super::gmatrix::{self, GMode};

pub struct SchubertReduction {
    /// Final matrix: agrees with the permutation v up to unit diagonal factors.
    pub normal_form: Mat,
    /// residues[i][j][l] = alpha_{i+1, j+1, l+1} (0-based storage): the mod-pi
    /// residue of the block pivot (1 + [l k0]_{n0}, l) of block (j, j) at
    /// stage i.
    pub residues: Vec<Vec<Vec<FqElem>>>,
    /// The target permutation v: row of the pivot in column c.
    pub v_perm: Vec<usize>,
}

/// Runs the stage-wise elimination for 1 <= i <= n'. Row and column
/// operations act on the unscaled matrix (the diagonal scaling commutes with
/// single-pivot operations). Errors when a designated pivot is not a unit.
pub fn schubert_reduce(
    x: &[TruncElem],
    rep: &Rep,
    _r: usize,
    t: &FieldTower,
) -> Result<SchubertReduction> {
    if rep.kind != RepKind::Special {
        return Err(Error::InvalidParameter(
            "Schubert reduction is defined for the special kind".into(),
        ));
    }
    let n = rep.n;
    let n0 = rep.n0;
    let npr = rep.nprime;
    let mut a = gmatrix::g_matrix(x, rep, GMode::Reduced, t)?;
    let h = a.precision();
    if h == 0 {
        return Err(Error::PrecisionUnderflow(
            "no precision left after reduction".into(),
        ));
    }
    // pivot row within a block for column l (0-based): [l k0]_{n0}
    let pivot_pos = |l: usize| (l * rep.k0) % n0;
    let mut residues: Vec<Vec<Vec<FqElem>>> = Vec::with_capacity(npr);
    for stage in 0..npr {
        // record residues of the designated pivots of blocks (j, j), j <= stage
        let mut stage_res = Vec::with_capacity(stage + 1);
        for j in 0..=stage {
            let mut col_res = Vec::with_capacity(n0);
            for l in 0..n0 {
                let (pr, pc) = (j * n0 + pivot_pos(l), j * n0 + l);
                col_res.push(a.at(pr, pc).coeffs[0]);
            }
            stage_res.push(col_res);
        }
        residues.push(stage_res);

        // step (1): clear entries above each designated pivot of block
        // (stage, stage) by row operations with valuation >= 1 factors
        for l in 0..n0 {
            let (pr, pc) = (stage * n0 + pivot_pos(l), stage * n0 + l);
            let piv = a.at(pr, pc).clone();
            if !piv.is_unit(t) {
                return Err(Error::ConsistencyFailure(format!(
                    "stage {stage}: pivot ({pr},{pc}) is not a unit"
                )));
            }
            let piv_inv = piv.inv(t)?;
            for r in (stage * n0..pr).rev() {
                let e = a.at(r, pc);
                if e.is_zero(t) {
                    continue;
                }
                if e.valuation(t) == Some(0) {
                    return Err(Error::ConsistencyFailure(format!(
                        "stage {stage}: entry above pivot ({r},{pc}) is a unit"
                    )));
                }
                let f = e.mul(&piv_inv, t);
                row_op(&mut a, r, pr, &f, t);
            }
        }
        // steps (2)_l: clear the pivot column and row
        for l in 0..n0 {
            let (pr, pc) = (stage * n0 + pivot_pos(l), stage * n0 + l);
            let piv_inv = a.at(pr, pc).inv(t)?;
            for r in 0..n {
                if r == pr {
                    continue;
                }
                let e = a.at(r, pc);
                if e.is_zero(t) {
                    continue;
                }
                let f = e.mul(&piv_inv, t);
                row_op(&mut a, r, pr, &f, t);
            }
            for c in 0..n {
                if c == pc {
                    continue;
                }
                let e = a.at(pr, c);
                if e.is_zero(t) {
                    continue;
                }
                let f = e.mul(&piv_inv, t);
                col_op(&mut a, c, pc, &f, t);
            }
        }
    }
    // final form: v up to unit diagonal entries: entry (pivot_pos(l) + j n0,
    // l + j n0) a unit, all others zero
    let mut v_perm = vec![0usize; n];
    for j in 0..npr {
        for l in 0..n0 {
            v_perm[j * n0 + l] = j * n0 + pivot_pos(l);
        }
    }
    for c in 0..n {
        for r in 0..n {
            let e = a.at(r, c);
            if r == v_perm[c] {
                if !e.is_unit(t) {
                    return Err(Error::ConsistencyFailure(format!(
                        "normal form entry ({r},{c}) is not a unit"
                    )));
                }
            } else if !e.is_zero(t) {
                return Err(Error::ConsistencyFailure(format!(
                    "normal form entry ({r},{c}) did not vanish"
                )));
            }
        }
    }
    Ok(SchubertReduction {
        normal_form: a,
        residues,
        v_perm,
    })
}

fn row_op(a: &mut Mat, r: usize, pr: usize, f: &TruncElem, t: &FieldTower) {
    for c in 0..a.cols {
        let s = f.mul(a.at(pr, c), t);
        *a.at_mut(r, c) = a.at(r, c).sub(&s, t);
    }
}

fn col_op(a: &mut Mat, c: usize, pc: usize, f: &TruncElem, t: &FieldTower) {
    for r in 0..a.rows {
        let s = f.mul(a.at(r, pc), t);
        *a.at_mut(r, c) = a.at(r, c).sub(&s, t);
    }
}

/// The predicted residues: alpha_{., j, l} = sigma^l(m_{j}/m_{j-1}) with
/// m_0-convention m_1 for j = 0 (0-based l and j).
pub fn predicted_residues(x: &[TruncElem], rep: &Rep, t: &FieldTower) -> Vec<Vec<FqElem>> {
    let rd = gmatrix::residue_data(x, rep, t);
    let minors = rd.principal_minors(t);
    let mut out = Vec::with_capacity(rep.nprime);
    for j in 0..rep.nprime {
        let ratio = if j == 0 {
            minors[0]
        } else {
            t.field.mul(minors[j], t.field.inv(minors[j - 1]))
        };
        let mut col = Vec::with_capacity(rep.n0);
        let mut cur = ratio;
        for _ in 0..rep.n0 {
            col.push(cur);
            cur = t.sigma(cur);
        }
        out.push(col);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variety::points::{membership_precision, XhSpace};

    #[test]
    fn single_block_residues() {
        // n' = 1: residues are sigma^{l}(xbar_1)
        let t = FieldTower::new(2, 1, 2, 1, 1).unwrap();
        let rep = Rep::new(2, 1, RepKind::Special).unwrap();
        let h = 2;
        let space = XhSpace::new(&rep, h);
        let w = t.field.generator();
        // x = (w + pi*1, 1): admissible since xbar_1 = w != 0
        let p = crate::variety::points::VarietyPoint {
            coords: {
                let mut c = vec![t.zero(); space.total_len()];
                c[0] = w;
                c[1] = t.one();
                c[2] = t.one();
                c
            },
            m: 1,
        };
        let x = space.lift(&p, membership_precision(&rep, h) + 2, &t);
        let red = schubert_reduce(&x, &rep, 1, &t).unwrap();
        let pred = predicted_residues(&x, &rep, &t);
        let last = red.residues.last().unwrap();
        assert_eq!(last.len(), 1);
        for l in 0..rep.n0 {
            assert_eq!(last[0][l], pred[0][l]);
        }
        assert_eq!(pred[0][0], w);
        assert_eq!(pred[0][1], t.sigma(w));
    }
}
