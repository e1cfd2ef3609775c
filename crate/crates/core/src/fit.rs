//! Exact fitting of point-count sequences: stabilization detection, the
//! plain power fit, and the signed-power (half-weight) fit with minimal
//! support and held-out validation.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// A validated exact fit N_m = sum_b coeff_b * base_b^m.
#[derive(Debug, Clone)]
pub struct SignedFit {
    /// (base, coefficient), bases pairwise distinct nonzero integers.
    pub terms: Vec<(BigInt, BigInt)>,
    /// Largest j with a nonzero coefficient on +/- q^j.
    pub leading_exponent: usize,
    /// Number of data points used for validation beyond the solve.
    pub holdouts: usize,
}

impl SignedFit {
    /// Value at m = 0: the alternating-sum Euler characteristic.
    pub fn euler(&self) -> BigInt {
        self.terms.iter().map(|(_, c)| c.clone()).sum()
    }

    pub fn eval(&self, m: usize) -> BigInt {
        self.terms
            .iter()
            .map(|(b, c)| c * b.pow(m as u32))
            .sum()
    }
}

/// All counts equal: the sequence has stabilized.
pub fn stabilized(counts: &[BigUint]) -> Option<BigInt> {
    if counts.is_empty() {
        return None;
    }
    if counts.iter().all(|c| c == &counts[0]) {
        Some(BigInt::from(counts[0].clone()))
    } else {
        None
    }
}

/// The plain fit N_m = sum_{j <= d} c_j Q^{jm} with integer c_j, solved on
/// the first d+1 counts and validated on the rest (at least one hold-out).
pub fn fit_pure(counts: &[BigUint], q_base: &BigUint, d: usize) -> Result<SignedFit> {
    if counts.len() < d + 2 {
        return Err(Error::CountFitRefused(format!(
            "need {} counts for a degree-{d} fit, have {}",
            d + 2,
            counts.len()
        )));
    }
    let bases: Vec<BigInt> = (0..=d)
        .map(|j| BigInt::from(q_base.pow(j as u32)))
        .collect();
    let take = d + 1;
    let sol = solve_exponential(&bases, &counts[..take])?;
    let fit = SignedFit {
        terms: bases
            .iter()
            .cloned()
            .zip(sol)
            .filter(|(_, c)| !c.is_zero())
            .collect(),
        leading_exponent: 0,
        holdouts: counts.len() - take,
    };
    for (i, c) in counts.iter().enumerate() {
        if fit.eval(i + 1) != BigInt::from(c.clone()) {
            return Err(Error::CountFitRefused(format!(
                "validation failed at m = {} (non-polynomial count)",
                i + 1
            )));
        }
    }
    Ok(fit)
}

/// Minimal-support fit over the signed power bases {±q^j : 0 <= j <= max_j}.
/// Solves on the first s counts per candidate support and demands that every
/// remaining count validates (at least `min_holdout` of them). Refuses on
/// ambiguity (two different minimal fits) or when no support works.
pub fn fit_signed_powers(
    counts: &[BigUint],
    q: u64,
    max_j: usize,
    min_holdout: usize,
) -> Result<SignedFit> {
    let m_count = counts.len();
    let counts_int: Vec<BigInt> = counts.iter().map(|c| BigInt::from(c.clone())).collect();
    // candidate bases, largest magnitude first, positive before negative
    let mut bases: Vec<BigInt> = Vec::new();
    for j in (0..=max_j).rev() {
        let b = BigInt::from(q).pow(j as u32);
        bases.push(b.clone());
        bases.push(-b);
    }
    bases.retain(|b| !b.is_zero());
    bases.dedup();
    let nb = bases.len();
    let smax = m_count.saturating_sub(min_holdout);
    for s in 1..=smax {
        let mut found: Option<SignedFit> = None;
        let mut ambiguous = false;
        let mut subset = (0..s).collect::<Vec<usize>>();
        loop {
            // try this subset
            let cur_bases: Vec<BigInt> = subset.iter().map(|&i| bases[i].clone()).collect();
            if let Ok(sol) = solve_exponential(&cur_bases, &counts[..s]) {
                let fit = SignedFit {
                    terms: cur_bases
                        .iter()
                        .cloned()
                        .zip(sol)
                        .filter(|(_, c)| !c.is_zero())
                        .collect(),
                    leading_exponent: 0,
                    holdouts: m_count - s,
                };
                let valid = (0..m_count).all(|i| fit.eval(i + 1) == counts_int[i]);
                if valid {
                    match &found {
                        None => found = Some(fit),
                        Some(prev) => {
                            let mut a = prev.terms.clone();
                            let mut b = fit.terms.clone();
                            a.sort();
                            b.sort();
                            if a != b {
                                ambiguous = true;
                            }
                        }
                    }
                }
            }
            // next subset
            if !next_subset(&mut subset, nb) {
                break;
            }
        }
        if ambiguous {
            return Err(Error::CountFitRefused(format!(
                "ambiguous support of size {s}; more counts needed"
            )));
        }
        if let Some(mut fit) = found {
            // leading exponent: largest j with |base| = q^j present
            let qb = BigInt::from(q);
            let lead = fit
                .terms
                .iter()
                .map(|(b, _)| {
                    let mut v = b.abs();
                    let mut j = 0usize;
                    while v > BigInt::one() {
                        v /= &qb;
                        j += 1;
                    }
                    j
                })
                .max()
                .unwrap_or(0);
            fit.leading_exponent = lead;
            return Ok(fit);
        }
    }
    Err(Error::CountFitRefused(
        "no signed-power fit within the support bound".into(),
    ))
}

fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let s = subset.len();
    let mut i = s;
    while i > 0 {
        i -= 1;
        if subset[i] < n - (s - i) {
            subset[i] += 1;
            for k in i + 1..s {
                subset[k] = subset[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves sum_b c_b base_b^{m} = counts[m-1] for m = 1..=s with integer c_b;
/// errors when the system is singular or the solution is non-integral.
fn solve_exponential(bases: &[BigInt], counts: &[BigUint]) -> Result<Vec<BigInt>> {
    let s = bases.len();
    assert!(counts.len() >= s);
    // Vandermonde-like matrix rows m = 1..s, columns bases^m
    let mut a = vec![vec![BigInt::zero(); s]; s];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, base) in bases.iter().enumerate() {
            row[c] = base.pow((r + 1) as u32);
        }
    }
    let rhs: Vec<BigInt> = counts[..s].iter().map(|c| BigInt::from(c.clone())).collect();
    let det = det_bigint(&a);
    if det.is_zero() {
        return Err(Error::CountFitRefused("singular fit system".into()));
    }
    let mut out = Vec::with_capacity(s);
    for c in 0..s {
        let mut ac = a.clone();
        for r in 0..s {
            ac[r][c] = rhs[r].clone();
        }
        let num = det_bigint(&ac);
        let (q, r) = num_integer::Integer::div_rem(&num, &det);
        if !r.is_zero() {
            return Err(Error::CountFitRefused(
                "non-integral fit coefficient".into(),
            ));
        }
        out.push(q);
    }
    Ok(out)
}

fn det_bigint(a: &[Vec<BigInt>]) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    if n == 1 {
        return a[0][0].clone();
    }
    // fraction-free Gaussian elimination (Bareiss)
    let mut m: Vec<Vec<BigInt>> = a.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = &num / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn pure_fit_affine_line() {
        // counts (q^n)^m: degree 1, c_1 = 1, euler = 1
        let counts = [b(4), b(16), b(64)];
        let fit = fit_pure(&counts, &b(4), 1).unwrap();
        assert_eq!(fit.euler(), BigInt::from(1));
    }

    #[test]
    fn pure_fit_refuses_half_weight() {
        // 4^m - 2(-2)^m - 2: not a polynomial in 4^m
        let counts = [b(6), b(6), b(78), b(222)];
        assert!(fit_pure(&counts, &b(4), 1).is_err());
    }

    #[test]
    fn signed_fit_recovers_curve_counts() {
        let counts = [b(6), b(6), b(78), b(222), b(1086)];
        let fit = fit_signed_powers(&counts, 2, 4, 2).unwrap();
        // leading term 4^m = q^{2m}: exponent 2
        assert_eq!(fit.leading_exponent, 2);
        // euler characteristic: 1 - 2 - 2 = -3
        assert_eq!(fit.euler(), BigInt::from(-3));
        assert_eq!(fit.eval(5), BigInt::from(1086));
    }

    #[test]
    fn stabilized_detection() {
        assert_eq!(stabilized(&[b(7), b(7), b(7)]), Some(BigInt::from(7)));
        assert_eq!(stabilized(&[b(7), b(8)]), None);
    }
}
