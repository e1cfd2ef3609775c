//! Matrices over the truncated ring, and F_p linear algebra used by the
//! semilinear (Frobenius-twisted) solvers.

use crate::error::{Error, Result};

use crate::ring::tower::FieldTower;
use crate::ring::trunc::TruncElem;

/// Dense square or rectangular matrix over O/pi^h, row major.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<TruncElem>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zero(t: &FieldTower, rows: usize, cols: usize, h: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![TruncElem::zero(t, h); rows * cols],
        }
    }

    pub fn identity(t: &FieldTower, n: usize, h: usize) -> Mat {
        let mut m = Self::zero(t, n, n, h);
        for i in 0..n {
            *m.at_mut(i, i) = TruncElem::one(t, h);
        }
        m
    }

    pub fn precision(&self) -> usize {
        self.data[0].precision()
    }

    pub fn at(&self, i: usize, j: usize) -> &TruncElem {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut TruncElem {
        &mut self.data[i * self.cols + j]
    }

    pub fn from_rows(rows: Vec<Vec<TruncElem>>) -> Mat {
        let r = rows.len();
        let c = rows[0].len();
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<TruncElem> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn mul(&self, other: &Mat, t: &FieldTower) -> Mat {
        assert_eq!(self.cols, other.rows);
        let h = self.precision();
        let mut out = Mat::zero(t, self.rows, other.cols, h);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero(t) {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if b.is_zero(t) {
                        continue;
                    }
                    let prod = a.mul(b, t);
                    *out.at_mut(i, j) = out.at(i, j).add(&prod, t);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[TruncElem], t: &FieldTower) -> Vec<TruncElem> {
        assert_eq!(self.cols, v.len());
        let h = self.precision();
        let mut out = vec![TruncElem::zero(t, h); self.rows];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.at(i, j);
                if a.is_zero(t) || v[j].is_zero(t) {
                    continue;
                }
                out[i] = out[i].add(&a.mul(&v[j], t), t);
            }
        }
        out
    }

    pub fn add(&self, other: &Mat, t: &FieldTower) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.add(b, t))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Mat, t: &FieldTower) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.sub(b, t))
                .collect(),
        }
    }

    /// Entry-wise sigma^k.
    pub fn sigma(&self, k: i64, t: &FieldTower) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.sigma(k, t)).collect(),
        }
    }

    pub fn truncate(&self, h: usize) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.truncate(h)).collect(),
        }
    }

    pub fn lift(&self, h: usize) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.lift(h)).collect(),
        }
    }

    /// Determinant by fraction-free expansion for small n, elimination otherwise.
    pub fn det(&self, t: &FieldTower) -> TruncElem {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let h = self.precision();
        match n {
            0 => TruncElem::one(t, h),
            1 => self.at(0, 0).clone(),
            2 => {
                let ad = self.at(0, 0).mul(self.at(1, 1), t);
                let bc = self.at(0, 1).mul(self.at(1, 0), t);
                ad.sub(&bc, t)
            }
            3 | 4 => {
                // cofactor expansion along the first row
                let mut acc = TruncElem::zero(t, h);
                for j in 0..n {
                    let a = self.at(0, j);
                    if a.is_zero(t) {
                        continue;
                    }
                    let m = self.minor(0, j, t);
                    let term = a.mul(&m.det(t), t);
                    if j % 2 == 0 {
                        acc = acc.add(&term, t);
                    } else {
                        acc = acc.sub(&term, t);
                    }
                }
                acc
            }
            _ => self.det_elim(t),
        }
    }

    fn minor(&self, i0: usize, j0: usize, _t: &FieldTower) -> Mat {
        let n = self.rows;
        let mut rows = Vec::with_capacity(n - 1);
        for i in 0..n {
            if i == i0 {
                continue;
            }
            let mut row = Vec::with_capacity(n - 1);
            for j in 0..n {
                if j == j0 {
                    continue;
                }
                row.push(self.at(i, j).clone());
            }
            rows.push(row);
        }
        Mat::from_rows(rows)
    }

    /// Determinant via elimination with unit pivots; falls back to cofactor
    /// expansion when no unit pivot exists in a column.
    fn det_elim(&self, t: &FieldTower) -> TruncElem {
        let n = self.rows;
        let h = self.precision();
        let mut m = self.clone();
        let mut det = TruncElem::one(t, h);
        let mut sign_flip = false;
        for col in 0..n {
            let pivot = (col..n).find(|&r| m.at(r, col).is_unit(t));
            let Some(p) = pivot else {
                // no unit pivot: do a cofactor expansion on the remaining block
                let sub = {
                    let mut rows = Vec::new();
                    for i in col..n {
                        let mut row = Vec::new();
                        for j in col..n {
                            row.push(m.at(i, j).clone());
                        }
                        rows.push(row);
                    }
                    Mat::from_rows(rows)
                };
                let mut acc = TruncElem::zero(t, h);
                for j in 0..sub.rows {
                    let a = sub.at(0, j);
                    if a.is_zero(t) {
                        continue;
                    }
                    let term = a.mul(&sub.minor(0, j, t).det(t), t);
                    if j % 2 == 0 {
                        acc = acc.add(&term, t);
                    } else {
                        acc = acc.sub(&term, t);
                    }
                }
                let mut d = det.mul(&acc, t);
                if sign_flip {
                    d = d.neg(t);
                }
                return d;
            };
            if p != col {
                for j in 0..n {
                    let a = m.at(p, j).clone();
                    let b = m.at(col, j).clone();
                    *m.at_mut(p, j) = b;
                    *m.at_mut(col, j) = a;
                }
                sign_flip = !sign_flip;
            }
            let piv = m.at(col, col).clone();
            det = det.mul(&piv, t);
            let piv_inv = piv.inv(t).unwrap();
            for r in col + 1..n {
                let factor = m.at(r, col).mul(&piv_inv, t);
                if factor.is_zero(t) {
                    continue;
                }
                for j in col..n {
                    let sub = factor.mul(m.at(col, j), t);
                    *m.at_mut(r, j) = m.at(r, j).sub(&sub, t);
                }
            }
        }
        if sign_flip {
            det = det.neg(t);
        }
        det
    }

    /// Inverse of a matrix whose determinant is a unit.
    pub fn inv(&self, t: &FieldTower) -> Result<Mat> {
        let n = self.rows;
        let h = self.precision();
        let mut m = self.clone();
        let mut inv = Mat::identity(t, n, h);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| m.at(r, col).is_unit(t))
                .ok_or(Error::SingularMatrix)?;
            if pivot != col {
                for j in 0..n {
                    let a = m.at(pivot, j).clone();
                    let b = m.at(col, j).clone();
                    *m.at_mut(pivot, j) = b;
                    *m.at_mut(col, j) = a;
                    let a = inv.at(pivot, j).clone();
                    let b = inv.at(col, j).clone();
                    *inv.at_mut(pivot, j) = b;
                    *inv.at_mut(col, j) = a;
                }
            }
            let piv_inv = m.at(col, col).inv(t)?;
            for j in 0..n {
                *m.at_mut(col, j) = m.at(col, j).mul(&piv_inv, t);
                *inv.at_mut(col, j) = inv.at(col, j).mul(&piv_inv, t);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = m.at(r, col).clone();
                if factor.is_zero(t) {
                    continue;
                }
                for j in 0..n {
                    let s = factor.mul(m.at(col, j), t);
                    *m.at_mut(r, j) = m.at(r, j).sub(&s, t);
                    let s = factor.mul(inv.at(col, j), t);
                    *inv.at_mut(r, j) = inv.at(r, j).sub(&s, t);
                }
            }
        }
        Ok(inv)
    }

    /// Solves self * x = rhs when the matrix is invertible at this precision.
    pub fn solve(&self, rhs: &[TruncElem], t: &FieldTower) -> Result<Vec<TruncElem>> {
        let inv = self.inv(t)?;
        Ok(inv.mul_vec(rhs, t))
    }
}

/// Dense F_p linear algebra on coefficient vectors (p small). Row-major,
/// entries in 0..p.
pub struct FpMat {
    pub p: u64,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl FpMat {
    pub fn zero(p: u64, rows: usize, cols: usize) -> FpMat {
        FpMat {
            p,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.p;
    }

    /// Row reduce [A | b] and return one solution plus a kernel basis.
    /// `rhs` may be empty to ask only for the kernel.
    pub fn solve_affine(&self, rhs: &[u64]) -> Option<(Vec<u64>, Vec<Vec<u64>>)> {
        let p = self.p;
        let (r, c) = (self.rows, self.cols);
        let width = c + 1;
        let mut m = vec![0u64; r * width];
        for i in 0..r {
            m[i * width..i * width + c].copy_from_slice(&self.data[i * c..(i + 1) * c]);
            m[i * width + c] = if rhs.is_empty() { 0 } else { rhs[i] % p };
        }
        let inv = |a: u64| -> u64 {
            let mut acc = 1u64;
            let mut b = a % p;
            let mut e = p - 2;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc * b % p;
                }
                b = b * b % p;
                e >>= 1;
            }
            acc
        };
        let mut pivot_col_of_row = Vec::new();
        let mut row = 0usize;
        for col in 0..c {
            let Some(pr) = (row..r).find(|&i| m[i * width + col] != 0) else {
                continue;
            };
            if pr != row {
                for k in 0..width {
                    m.swap(pr * width + k, row * width + k);
                }
            }
            let piv_inv = inv(m[row * width + col]);
            for k in col..width {
                m[row * width + k] = m[row * width + k] * piv_inv % p;
            }
            for i in 0..r {
                if i == row {
                    continue;
                }
                let f = m[i * width + col];
                if f == 0 {
                    continue;
                }
                for k in col..width {
                    let sub = f * m[row * width + k] % p;
                    m[i * width + k] = (m[i * width + k] + p - sub) % p;
                }
            }
            pivot_col_of_row.push(col);
            row += 1;
            if row == r {
                break;
            }
        }
        // consistency
        for i in row..r {
            if m[i * width + c] != 0 {
                return None;
            }
        }
        let mut particular = vec![0u64; c];
        for (ri, &pc) in pivot_col_of_row.iter().enumerate() {
            particular[pc] = m[ri * width + c];
        }
        let pivot_set: std::collections::HashSet<usize> = pivot_col_of_row.iter().copied().collect();
        let mut kernel = Vec::new();
        for free in 0..c {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![0u64; c];
            v[free] = 1;
            for (ri, &pc) in pivot_col_of_row.iter().enumerate() {
                let coef = m[ri * width + free];
                if coef != 0 {
                    v[pc] = (p - coef) % p;
                }
            }
            kernel.push(v);
        }
        Some((particular, kernel))
    }
}

/// Iterate all F_p-combinations of `basis` added to `base`, visiting each
/// exactly once, calling `f` until it returns true; returns the hit.
pub fn iterate_affine_space(
    p: u64,
    base: &[u64],
    basis: &[Vec<u64>],
    mut f: impl FnMut(&[u64]) -> bool,
) -> Option<Vec<u64>> {
    let k = basis.len();
    let mut digits = vec![0u64; k];
    let mut cur = base.to_vec();
    loop {
        if f(&cur) {
            return Some(cur);
        }
        // increment base-p counter and update cur incrementally
        let mut i = 0;
        loop {
            if i == k {
                return None;
            }
            digits[i] += 1;
            for (c, b) in cur.iter_mut().zip(&basis[i]) {
                *c = (*c + b) % p;
            }
            if digits[i] < p {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower() -> FieldTower {
        FieldTower::new(2, 1, 1, 2, 1).unwrap()
    }

    #[test]
    fn inverse_roundtrip() {
        let t = tower();
        let h = 2;
        let g = t.field.generator();
        let pi = TruncElem::monomial(&t, t.one(), 1, h);
        let m = Mat::from_rows(vec![
            vec![
                TruncElem::monomial(&t, g, 0, h),
                pi.clone(),
            ],
            vec![
                TruncElem::one(&t, h),
                TruncElem::monomial(&t, t.field.mul(g, g), 0, h),
            ],
        ]);
        let mi = m.inv(&t).unwrap();
        assert_eq!(m.mul(&mi, &t), Mat::identity(&t, 2, h));
    }

    #[test]
    fn det_multiplicative() {
        let t = tower();
        let h = 3;
        let g = t.field.generator();
        let a = Mat::from_rows(vec![
            vec![TruncElem::monomial(&t, g, 0, h), TruncElem::monomial(&t, t.one(), 1, h)],
            vec![TruncElem::one(&t, h), TruncElem::monomial(&t, g, 2, h)],
        ]);
        let b = Mat::from_rows(vec![
            vec![TruncElem::monomial(&t, t.one(), 1, h), TruncElem::one(&t, h)],
            vec![TruncElem::monomial(&t, g, 0, h), TruncElem::zero(&t, h)],
        ]);
        let lhs = a.mul(&b, &t).det(&t);
        let rhs = a.det(&t).mul(&b.det(&t), &t);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn fp_solver() {
        let mut m = FpMat::zero(3, 2, 3);
        m.set(0, 0, 1);
        m.set(0, 1, 2);
        m.set(1, 1, 1);
        m.set(1, 2, 1);
        let (sol, kernel) = m.solve_affine(&[1, 2]).unwrap();
        // check A*sol = rhs
        let apply = |v: &[u64]| {
            vec![
                (v[0] + 2 * v[1]) % 3,
                (v[1] + v[2]) % 3,
            ]
        };
        assert_eq!(apply(&sol), vec![1, 2]);
        assert_eq!(kernel.len(), 1);
        let k = &kernel[0];
        assert_eq!(apply(k), vec![0, 0]);
    }
}
