//! The embedding of coordinate vectors into the parahoric quotient and the
//! Deligne-Lusztig form of X_h (Coxeter kind).

use crate::error::{Error, Result};
use crate::group::rep::{Rep, RepKind};
use crate::group::solvers::gamma_perm;
use crate::linalg::Mat;
use crate::ring::tower::FieldTower;
use crate::ring::trunc::TruncElem;

/// lambda(x) = sum_i pi^{-floor(k0 (i-1)/n0)} b^{i-1} D(x_i): an integral
/// matrix whose determinant equals det g_b^red(x). Input coordinates at
/// uniform precision h; output at precision h.
pub fn lambda_embed(x: &[TruncElem], rep: &Rep, t: &FieldTower) -> Result<Mat> {
    if rep.kind != RepKind::Coxeter {
        return Err(Error::InvalidParameter(
            "the lambda embedding is defined for the Coxeter kind".into(),
        ));
    }
    let n = rep.n;
    let h = x[0].precision();
    let mut acc = Mat::zero(t, n, n, h);
    let mut bpow = crate::group::rep::MonomialMat::identity(n);
    for (i, xi) in x.iter().enumerate() {
        // term = pi^{-dkn_exp(i)} b^i D(x_i): b^i is monomial, D diagonal
        let d = rep.dkn_exp(i);
        for j in 0..n {
            // (b^i D(x_i)) e_j = sigma^{[j l]}(x_i) pi^{pexp_j} e_{perm_j}
            let coeff = xi.sigma(((j * rep.l) % n) as i64, t);
            let shift = bpow.pexp[j] - d as i64;
            if shift < 0 {
                return Err(Error::ConsistencyFailure(
                    "lambda term with negative valuation".into(),
                ));
            }
            let entry = coeff.mul_pi(shift as usize, t);
            let r = bpow.perm[j];
            *acc.at_mut(r, j) = acc.at(r, j).add(&entry, t);
        }
        bpow = rep.monomial.mul(&bpow);
    }
    Ok(acc)
}

/// Checks the identity lambda(x) = g_b^red(gamma(x)) gamma, where gamma
/// permutes coordinates.
pub fn lambda_vs_gred(x: &[TruncElem], rep: &Rep, t: &FieldTower) -> Result<bool> {
    let n = rep.n;
    let lam = lambda_embed(x, rep, t)?;
    let gamma = gamma_perm(rep);
    // gamma(x): gamma as a matrix sends e_i -> e_{gamma(i)}; acting on the
    // coordinate vector: (gamma x)_{gamma(i)} = x_i
    let mut gx = vec![TruncElem::zero(t, x[0].precision()); n];
    for i in 0..n {
        gx[gamma.perm[i]] = x[i].clone();
    }
    let gred = super::gmatrix::g_matrix(&gx, rep, super::gmatrix::GMode::Reduced, t)?;
    let p = gred.precision();
    let gamma_mat = gamma.to_mat(t, p);
    let rhs = gred.mul(&gamma_mat, t);
    Ok(lam.truncate(p) == rhs)
}

/// True when u = lambda(x)^{-1} F(lambda(x)) has 1's on the diagonal and 0's
/// outside the first column at the pattern precision of level h; this holds
/// exactly on the points of X_h.
pub fn dl_form_check(x: &[TruncElem], rep: &Rep, h: usize, t: &FieldTower) -> Result<bool> {
    let lam = lambda_embed(x, rep, t)?;
    let lam_inv = lam.inv(t).map_err(|_| Error::SingularMatrix)?;
    let flam = rep.twisted_frobenius(&lam, t)?;
    let u = lam_inv.mul(&flam, t);
    let pat = rep.pattern(h);
    let n = rep.n;
    for i in 0..n {
        for j in 0..n {
            let e = u.at(i, j).truncate(pat.prec(i, j).min(u.precision()));
            if i == j {
                let one = TruncElem::one(t, e.precision());
                if e != one {
                    return Ok(false);
                }
            } else if j > 0 && !e.is_zero(t) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::field::FqElem;

    fn sample_vectors(t: &FieldTower, n: usize, h: usize, take: usize) -> Vec<Vec<TruncElem>> {
        let elems: Vec<FqElem> = t.field.elements().collect();
        let mut out = Vec::new();
        let mut state = 1u64;
        for _ in 0..take {
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                let mut coeffs = Vec::with_capacity(h);
                for _ in 0..h {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    coeffs.push(elems[(state >> 33) as usize % elems.len()]);
                }
                v.push(TruncElem::from_coeffs(coeffs));
            }
            out.push(v);
        }
        out
    }

    #[test]
    fn lambda_identity_n3_kappa2() {
        let t = FieldTower::new(2, 1, 3, 1, 1).unwrap();
        let rep = Rep::new(3, 2, RepKind::Coxeter).unwrap();
        for x in sample_vectors(&t, 3, 4, 25) {
            assert!(lambda_vs_gred(&x, &rep, &t).unwrap());
        }
    }

    #[test]
    fn lambda_identity_n2() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let rep = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        for x in sample_vectors(&t, 2, 3, 25) {
            assert!(lambda_vs_gred(&x, &rep, &t).unwrap());
        }
    }

    #[test]
    fn lambda_sigma_n_compat() {
        // lambda(sigma^n x) = F^n(lambda(x))
        let t = FieldTower::new(2, 1, 1, 2, 2).unwrap();
        let rep = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        for x in sample_vectors(&t, 2, 3, 15) {
            let lhs = lambda_embed(
                &x.iter().map(|e| e.sigma(2, &t)).collect::<Vec<_>>(),
                &rep,
                &t,
            )
            .unwrap();
            let rhs = rep
                .twisted_frobenius_pow(&lambda_embed(&x, &rep, &t).unwrap(), 2, &t)
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
