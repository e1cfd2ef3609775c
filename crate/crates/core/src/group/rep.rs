//! Basic representatives b (Coxeter-type and special), the block pattern of
//! the parahoric quotients, and the twisted Frobenius g -> b sigma(g) b^{-1}.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::ring::tower::FieldTower;
use crate::ring::trunc::TruncElem;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RepKind {
    Special,
    Coxeter,
}

/// A monomial matrix: column j maps to pi^{pexp[j]} * e_{perm[j]} (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialMat {
    pub perm: Vec<usize>,
    pub pexp: Vec<i64>,
}

impl MonomialMat {
    pub fn identity(n: usize) -> MonomialMat {
        MonomialMat {
            perm: (0..n).collect(),
            pexp: vec![0; n],
        }
    }

    pub fn mul(&self, other: &MonomialMat) -> MonomialMat {
        // (self * other) e_j = self(pi^{o.pexp[j]} e_{o.perm[j]})
        let n = self.perm.len();
        let mut perm = vec![0; n];
        let mut pexp = vec![0; n];
        for j in 0..n {
            let k = other.perm[j];
            perm[j] = self.perm[k];
            pexp[j] = other.pexp[j] + self.pexp[k];
        }
        MonomialMat { perm, pexp }
    }

    pub fn inv(&self) -> MonomialMat {
        let n = self.perm.len();
        let mut perm = vec![0; n];
        let mut pexp = vec![0; n];
        for j in 0..n {
            perm[self.perm[j]] = j;
            pexp[self.perm[j]] = -self.pexp[j];
        }
        MonomialMat { perm, pexp }
    }

    pub fn pow(&self, k: usize) -> MonomialMat {
        let mut acc = MonomialMat::identity(self.perm.len());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Dense form at precision h; all exponents must be nonnegative.
    pub fn to_mat(&self, t: &FieldTower, h: usize) -> Mat {
        let n = self.perm.len();
        let mut m = Mat::zero(t, n, n, h);
        for j in 0..n {
            assert!(self.pexp[j] >= 0, "negative power of pi in dense form");
            *m.at_mut(self.perm[j], j) = TruncElem::monomial(t, t.one(), self.pexp[j] as usize, h);
        }
        m
    }

    /// Conjugate a dense matrix: self * g * self^{-1}. Entry moves
    /// (i, j) -> (perm[i], perm[j]) and is scaled by pi^{pexp[i] - pexp[j]}.
    pub fn conj(&self, g: &Mat, t: &FieldTower) -> Result<Mat> {
        let n = self.perm.len();
        let h = g.precision();
        let mut out = Mat::zero(t, n, n, h);
        for i in 0..n {
            for j in 0..n {
                let e = g.at(i, j);
                if e.is_zero(t) {
                    continue;
                }
                let d = self.pexp[i] - self.pexp[j];
                // Negative shifts drop the top coefficient; in the level-h
                // quotient that coefficient is spurious, so zero-extend back.
                let shifted = if d >= 0 {
                    e.mul_pi(d as usize, t)
                } else {
                    e.div_pi((-d) as usize, t)
                        .map_err(|_| {
                            Error::PrecisionUnderflow(format!(
                                "entry ({i},{j}) has valuation below {}",
                                -d
                            ))
                        })?
                        .lift(h)
                };
                *out.at_mut(self.perm[i], self.perm[j]) = shifted;
            }
        }
        Ok(out)
    }
}

/// Valuation-floor / precision pattern of the parahoric quotient: within each
/// n0 x n0 block, diagonal entries live in O/pi^h, entries below the block
/// diagonal in O/pi^{h-1}, entries above in pi O/pi^h.
#[derive(Clone, Copy, Debug)]
pub struct ParahoricPattern {
    pub n: usize,
    pub n0: usize,
    pub h: usize,
}

impl ParahoricPattern {
    /// Minimal valuation of entry (i, j), 0-based.
    pub fn floor(&self, i: usize, j: usize) -> usize {
        if i % self.n0 < j % self.n0 {
            1
        } else {
            0
        }
    }

    /// Exclusive upper precision of entry (i, j): coefficients at levels
    /// >= prec are zero in the quotient.
    pub fn prec(&self, i: usize, j: usize) -> usize {
        if i % self.n0 > j % self.n0 {
            self.h - 1
        } else {
            self.h
        }
    }

    /// Number of free coefficients of entry (i, j).
    pub fn slot_len(&self, i: usize, j: usize) -> usize {
        self.prec(i, j) - self.floor(i, j)
    }

    /// Zeroes the coefficients outside the band; entries are stored at
    /// uniform precision h.
    pub fn normalize(&self, g: &Mat, t: &FieldTower) -> Mat {
        let mut out = g.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                let e = out.at_mut(i, j);
                for l in 0..self.floor(i, j) {
                    e.coeffs[l] = t.zero();
                }
                for l in self.prec(i, j)..self.h {
                    e.coeffs[l] = t.zero();
                }
            }
        }
        out
    }

    pub fn contains(&self, g: &Mat, t: &FieldTower) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                let e = g.at(i, j);
                for l in 0..self.floor(i, j) {
                    if !t.field.is_zero(e.coeffs[l]) {
                        return false;
                    }
                }
                for l in self.prec(i, j)..self.h {
                    if !t.field.is_zero(e.coeffs[l]) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// A basic representative with Kottwitz invariant kappa, in monomial form.
#[derive(Clone, Debug)]
pub struct Rep {
    pub n: usize,
    pub kappa: usize,
    pub kind: RepKind,
    pub nprime: usize,
    pub n0: usize,
    pub k0: usize,
    /// e_{kappa,n}: coprime to n, congruent to k0 mod n0 (Coxeter kind).
    pub e: usize,
    /// Inverse of e mod n.
    pub l: usize,
    /// Inverse of k0 mod n0 (1 when n0 = 1).
    pub l0: usize,
    pub monomial: MonomialMat,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Rep {
    pub fn new(n: usize, kappa: usize, kind: RepKind) -> Result<Rep> {
        if kappa >= n {
            return Err(Error::InvalidParameter(format!(
                "kappa must satisfy 0 <= kappa < n, got kappa={kappa}, n={n}"
            )));
        }
        let nprime = if kappa == 0 { n } else { gcd(n, kappa) };
        let n0 = n / nprime;
        let k0 = kappa / nprime;
        // smallest positive e coprime to n with e = k0 mod n0; e = 1 when k0 <= 1
        let e = if k0 <= 1 {
            1
        } else {
            (0..)
                .map(|j| k0 + j * n0)
                .find(|&cand| gcd(cand, n) == 1)
                .unwrap()
        };
        let l = (1..=n).find(|&l| (e * l) % n == 1 % n).unwrap_or(1);
        let l0 = if n0 == 1 {
            1
        } else {
            (1..=n0).find(|&l| (k0 * l) % n0 == 1).unwrap_or(1)
        };
        let monomial = match kind {
            RepKind::Coxeter => {
                // b = b_0^e t_{kappa,n}: column j -> pi^{texp(j)} e_{j+e mod n}
                let mut perm = vec![0usize; n];
                let mut pexp = vec![0i64; n];
                for j in 0..n {
                    perm[j] = (j + e) % n;
                    let j0 = j % n0;
                    pexp[j] = if j0 >= n0 - k0 && k0 > 0 { 1 } else { 0 };
                }
                MonomialMat { perm, pexp }
            }
            RepKind::Special => {
                // block diagonal with blocks Pi_0^{k0}
                let mut perm = vec![0usize; n];
                let mut pexp = vec![0i64; n];
                for j in 0..n {
                    let blk = j / n0;
                    let pos = j % n0;
                    let target = pos + k0;
                    if target < n0 {
                        perm[j] = blk * n0 + target;
                        pexp[j] = 0;
                    } else {
                        perm[j] = blk * n0 + (target - n0);
                        pexp[j] = 1;
                    }
                }
                MonomialMat { perm, pexp }
            }
        };
        Ok(Rep {
            n,
            kappa,
            kind,
            nprime,
            n0,
            k0,
            e,
            l,
            l0,
            monomial,
        })
    }

    pub fn pattern(&self, h: usize) -> ParahoricPattern {
        ParahoricPattern {
            n: self.n,
            n0: self.n0,
            h,
        }
    }

    pub fn matrix(&self, t: &FieldTower, h: usize) -> Mat {
        self.monomial.to_mat(t, h)
    }

    /// F(g) = b sigma(g) b^{-1}. Errors when an entry's valuation cannot
    /// absorb the pi-shift from b^{-1}.
    pub fn twisted_frobenius(&self, g: &Mat, t: &FieldTower) -> Result<Mat> {
        self.monomial.conj(&g.sigma(1, t), t)
    }

    /// F^k with k >= 0.
    pub fn twisted_frobenius_pow(&self, g: &Mat, k: usize, t: &FieldTower) -> Result<Mat> {
        let mut out = g.clone();
        for _ in 0..k {
            out = self.twisted_frobenius(&out, t)?;
        }
        Ok(out)
    }

    /// The diagonal embedding D(a) = diag(a, sigma^l a, sigma^{2l} a, ...),
    /// whose image is the F-fixed diagonal for the Coxeter kind.
    pub fn diag_embed(&self, a: &TruncElem, t: &FieldTower) -> Mat {
        let n = self.n;
        let h = a.precision();
        let mut m = Mat::zero(t, n, n, h);
        for i in 0..n {
            *m.at_mut(i, i) = a.sigma(((i * self.l) % n) as i64, t);
        }
        m
    }

    /// Kottwitz invariant of the representative: ord(det b).
    pub fn ord_det(&self) -> i64 {
        self.monomial.pexp.iter().sum()
    }

    /// Exponent of the scaling matrix relating g_b and its reduced form:
    /// floor(k0 * i / n0) for column i (0-based).
    pub fn dkn_exp(&self, i: usize) -> usize {
        self.k0 * i / self.n0
    }

    /// ord(det D_{kappa,n}) = sum of the column exponents.
    pub fn dkn_total(&self) -> usize {
        (0..self.n).map(|i| self.dkn_exp(i)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_entries(t: &FieldTower, m: &Mat) -> Vec<Vec<String>> {
        (0..m.rows)
            .map(|i| {
                (0..m.cols)
                    .map(|j| {
                        let e = m.at(i, j);
                        if e.is_zero(t) {
                            "0".into()
                        } else if e == &TruncElem::one(t, e.precision()) {
                            "1".into()
                        } else if e.valuation(t) == Some(1)
                            && e.coeffs[1] == t.one()
                            && e.coeffs.iter().filter(|&&c| !t.field.is_zero(c)).count() == 1
                        {
                            "p".into()
                        } else {
                            "?".into()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn coxeter_3_1() {
        let t = FieldTower::new(2, 1, 1, 3, 1).unwrap();
        let r = Rep::new(3, 1, RepKind::Coxeter).unwrap();
        assert_eq!((r.nprime, r.n0, r.k0, r.e), (1, 3, 1, 1));
        let m = r.matrix(&t, 2);
        assert_eq!(
            mat_entries(&t, &m),
            vec![
                vec!["0", "0", "p"],
                vec!["1", "0", "0"],
                vec!["0", "1", "0"]
            ]
        );
    }

    #[test]
    fn coxeter_3_2() {
        let t = FieldTower::new(2, 1, 1, 3, 1).unwrap();
        let r = Rep::new(3, 2, RepKind::Coxeter).unwrap();
        assert_eq!((r.nprime, r.n0, r.k0, r.e), (1, 3, 2, 2));
        let m = r.matrix(&t, 2);
        assert_eq!(
            mat_entries(&t, &m),
            vec![
                vec!["0", "p", "0"],
                vec!["0", "0", "p"],
                vec!["1", "0", "0"]
            ]
        );
    }

    #[test]
    fn special_2_0_identity() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let r = Rep::new(2, 0, RepKind::Special).unwrap();
        assert_eq!((r.nprime, r.n0, r.k0), (2, 1, 0));
        assert_eq!(r.matrix(&t, 2), Mat::identity(&t, 2, 2));
    }

    #[test]
    fn special_power_is_pi_k0() {
        // b^{n0} = pi^{k0} Id blockwise
        let r = Rep::new(4, 2, RepKind::Special).unwrap();
        assert_eq!((r.nprime, r.n0, r.k0), (2, 2, 1));
        let p = r.monomial.pow(r.n0);
        assert_eq!(p.perm, vec![0, 1, 2, 3]);
        assert_eq!(p.pexp, vec![1, 1, 1, 1]);
    }

    #[test]
    fn coxeter_power_is_pi_kappa() {
        // b^n = pi^kappa Id for the Coxeter kind
        for (n, kappa) in [(2usize, 0usize), (2, 1), (3, 1), (3, 2), (4, 2)] {
            let r = Rep::new(n, kappa, RepKind::Coxeter).unwrap();
            let p = r.monomial.pow(n);
            assert_eq!(p.perm, (0..n).collect::<Vec<_>>());
            assert!(p.pexp.iter().all(|&v| v == kappa as i64));
        }
    }

    #[test]
    fn twisted_frobenius_multiplicative_and_order() {
        let t = FieldTower::new(2, 1, 2, 2, 1).unwrap();
        let r = Rep::new(4, 2, RepKind::Special).unwrap();
        let h = 2;
        let pat = r.pattern(h);
        // F^{n0} = sigma^{n0} on pattern matrices
        let g = {
            let mut g = Mat::identity(&t, 4, h);
            let a = t.field.generator();
            *g.at_mut(1, 0) = TruncElem::monomial(&t, a, 0, h).truncate(h);
            *g.at_mut(0, 1) = TruncElem::monomial(&t, a, 1, h);
            pat.normalize(&g, &t)
        };
        let lhs = r.twisted_frobenius_pow(&g, r.n0, &t).unwrap();
        assert_eq!(lhs, g.sigma(r.n0 as i64, &t));
        // multiplicativity on invertible samples
        let idm = Mat::identity(&t, 4, h);
        assert_eq!(r.twisted_frobenius(&idm, &t).unwrap(), idm);
    }
}
