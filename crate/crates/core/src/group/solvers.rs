//! Constructive solvers: normalizer representatives, Galois lifts, the
//! integral sigma-conjugator between the two representatives, and the
//! twisted-conjugation back-substitution.

use crate::error::{Error, Result};
use crate::linalg::{FpMat, Mat};
use crate::ring::field::FqElem;
use crate::ring::tower::FieldTower;
use crate::ring::trunc::TruncElem;

use super::rep::{MonomialMat, Rep, RepKind};

/// Coset representatives of N_{G_h}(T_h)/T_h for the Coxeter kind: the powers
/// of the permutation matrix b^{n0} pi^{-k0}. Conjugation by the j-th
/// representative acts on T_h = {D(a)} as a -> sigma^{n0 l j}(a).
pub fn normalizer_quotient(rep: &Rep, h: usize, t: &FieldTower) -> Result<Vec<Mat>> {
    if rep.kind != RepKind::Coxeter {
        return Err(Error::InvalidParameter(
            "normalizer representatives require the Coxeter kind".into(),
        ));
    }
    let base = {
        let bn0 = rep.monomial.pow(rep.n0);
        // b^{n0} pi^{-k0} is a permutation matrix
        let adj = MonomialMat {
            perm: bn0.perm.clone(),
            pexp: bn0.pexp.iter().map(|&v| v - rep.k0 as i64).collect(),
        };
        if adj.pexp.iter().any(|&v| v != 0) {
            return Err(Error::ConsistencyFailure(
                "b^{n0} pi^{-k0} is not a permutation matrix".into(),
            ));
        }
        adj
    };
    let mut out = Vec::with_capacity(rep.nprime);
    let mut cur = MonomialMat::identity(rep.n);
    for _ in 0..rep.nprime {
        out.push(cur.to_mat(t, h));
        cur = cur.mul(&base);
    }
    Ok(out)
}

/// An element g of G_h with g x g^{-1} = sigma^{n0 j}(x) for all x in T_h
/// (Coxeter kind, 0 <= j < n'). Realized as a power of b^{n0} pi^{-k0}.
pub fn galois_lift(rep: &Rep, j: usize, h: usize, t: &FieldTower) -> Result<Mat> {
    if rep.kind != RepKind::Coxeter {
        return Err(Error::InvalidParameter(
            "Galois lifts require the Coxeter kind".into(),
        ));
    }
    let npr = rep.nprime;
    let j = j % npr.max(1);
    // conjugation by (b^{n0} pi^{-k0})^{j'} acts by sigma^{n0 l j'}; solve l j' = j mod n'
    let jp = (0..npr)
        .find(|&jp| (rep.l * jp) % npr == j % npr)
        .ok_or_else(|| Error::ConsistencyFailure("l is invertible mod n'".into()))?;
    let reps = normalizer_quotient(rep, h, t)?;
    Ok(reps[jp].clone())
}

/// Solves g^{-1} b_cox sigma(g) = b_sp over O/pi^{h_w} by prime-field linear
/// algebra on the coefficients, returning the first invertible solution in a
/// fixed deterministic enumeration of the solution space.
pub fn find_integral_conjugator(n: usize, kappa: usize, h_w: usize, t: &FieldTower) -> Result<Mat> {
    let cox = Rep::new(n, kappa, RepKind::Coxeter)?;
    let sp = Rep::new(n, kappa, RepKind::Special)?;
    if cox.monomial == sp.monomial {
        return Ok(Mat::identity(t, n, h_w));
    }
    // Unknown: g with coefficients in F_{q^n} (forced by sigma^n(g) = g).
    // Equation: b_cox sigma(g) = g b_sp, entrywise over coefficient slots.
    assert_eq!(t.n(), n, "tower degree mismatch");
    let nf = n * t.f; // F_p-dimension of F_{q^n}
    let p = t.p;
    let dim = n * n * h_w * nf;
    // basis of F_{q^n} over F_p: powers of the subfield generator
    let sub_gen = t.subfield_generator(n);
    let mut basis = Vec::with_capacity(nf);
    let mut cur = t.one();
    for _ in 0..nf {
        basis.push(cur);
        cur = t.field.mul(cur, sub_gen);
    }
    let coord = SubfieldCoords::new(t, &basis);
    // sigma on F_{q^n} as an nf x nf matrix over F_p: column c = coords of sigma(basis c)
    let sigma_mat: Vec<Vec<u64>> = basis.iter().map(|&b| coord.of(t.sigma(b), t)).collect();
    let slot = |i: usize, j: usize, l: usize, c: usize| ((i * n + j) * h_w + l) * nf + c;
    let cox_inv_perm = invert_perm(&cox.monomial.perm);
    let mut fp = FpMat::zero(p, n * n * h_w * nf, dim);
    let mut r = 0usize;
    for i in 0..n {
        for j in 0..n {
            // (b_cox sigma(g))_{i,j} = pi^{v} sigma(g_{i',j}), i' = perm^{-1}(i);
            // (g b_sp)_{i,j} = pi^{w_j} g_{i, perm(j)}
            let ip = cox_inv_perm[i];
            let v_ip = cox.monomial.pexp[ip] as usize;
            let jp = sp.monomial.perm[j];
            let w_jp = sp.monomial.pexp[j] as usize;
            for lvl in 0..h_w {
                // coordinate-wise equation: sigma-part minus plain part = 0
                for cc in 0..nf {
                    if lvl >= v_ip {
                        for c in 0..nf {
                            let v = sigma_mat[c][cc];
                            if v != 0 {
                                let k = slot(ip, j, lvl - v_ip, c);
                                fp.set(r, k, (fp.at(r, k) + v) % p);
                            }
                        }
                    }
                    if lvl >= w_jp {
                        let k = slot(i, jp, lvl - w_jp, cc);
                        fp.set(r, k, (fp.at(r, k) + p - 1) % p);
                    }
                    r += 1;
                }
            }
        }
    }
    let (_, kernel) = fp
        .solve_affine(&[])
        .ok_or_else(|| Error::ConsistencyFailure("homogeneous system inconsistent".into()))?;
    if kernel.is_empty() {
        return Err(Error::ConsistencyFailure(
            "sigma-conjugacy solution space is trivial".into(),
        ));
    }
    let build = |coords: &[u64]| -> Mat {
        let mut g = Mat::zero(t, n, n, h_w);
        for i in 0..n {
            for j in 0..n {
                let e = g.at_mut(i, j);
                for lvl in 0..h_w {
                    let mut acc = FqElem::ZERO;
                    for (c, &bv) in basis.iter().enumerate() {
                        let v = coords[slot(i, j, lvl, c)] % p;
                        for _ in 0..v {
                            acc = t.field.add(acc, bv);
                        }
                    }
                    e.coeffs[lvl] = acc;
                }
            }
        }
        g
    };
    // deterministic scan: step s assigns digit splitmix(s, i) mod p to kernel
    // vector i, so every vector participates from the first step
    for step in 1u64..=(1 << 16) {
        let mut coords = vec![0u64; dim];
        for (vi, kv) in kernel.iter().enumerate() {
            let d = splitmix(step.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ vi as u64) % p;
            if d == 0 {
                continue;
            }
            for (c, &v) in kv.iter().enumerate() {
                coords[c] = (coords[c] + d * v) % p;
            }
        }
        let g = build(&coords);
        if !g.det(t).is_unit(t) {
            continue;
        }
        // verify by substitution
        let lhs = cox.matrix(t, h_w).mul(&g.sigma(1, t), t);
        let rhs = g.mul(&sp.matrix(t, h_w), t);
        if lhs == rhs {
            return Ok(g);
        }
        return Err(Error::ConsistencyFailure(
            "kernel element failed substitution".into(),
        ));
    }
    Err(Error::ConsistencyFailure(
        "no invertible solution found (scan exhausted)".into(),
    ))
}

fn invert_perm(perm: &[usize]) -> Vec<usize> {
    let mut v = vec![0usize; perm.len()];
    for (j, &pj) in perm.iter().enumerate() {
        v[pj] = j;
    }
    v
}

/// F_p-coordinates of subfield elements against a fixed basis.
struct SubfieldCoords {
    m: FpMat,
}

impl SubfieldCoords {
    fn new(t: &FieldTower, basis: &[FqElem]) -> SubfieldCoords {
        let deg = t.field.degree;
        let mut m = FpMat::zero(t.p, deg, basis.len());
        for (c, &b) in basis.iter().enumerate() {
            for (r, &v) in t.field.coeffs(b).iter().enumerate() {
                m.set(r, c, v);
            }
        }
        SubfieldCoords { m }
    }

    fn of(&self, x: FqElem, t: &FieldTower) -> Vec<u64> {
        let rhs = t.field.coeffs(x);
        let (sol, _) = self
            .m
            .solve_affine(&rhs)
            .expect("element outside the subfield span");
        sol
    }
}

pub struct TwistedConjSolution {
    pub x: Mat,
    pub g: Mat,
}

/// The permutation gamma with gamma b_0^e gamma^{-1} = b_0: the inverse of
/// 1 -> 1, i -> [(i-1) e] + 1 (as a matrix, gamma e_i = e_{gamma(i)}).
pub fn gamma_perm(rep: &Rep) -> MonomialMat {
    let n = rep.n;
    let mut fwd = vec![0usize; n];
    for (i, f) in fwd.iter_mut().enumerate() {
        *f = (i * rep.e) % n;
    }
    let mut inv = vec![0usize; n];
    for (i, &v) in fwd.iter().enumerate() {
        inv[v] = i;
    }
    MonomialMat {
        perm: inv,
        pexp: vec![0; n],
    }
}

/// Solves x^{-1} g F(x) = A for A in the lower-unipotent pattern subgroup,
/// by back substitution from the bottom row upward (Coxeter kind).
///
/// Matrices live in the gamma-conjugated coordinates where the unipotent
/// subgroups are genuinely lower triangular.
pub fn solve_twisted_conjugation(
    a_mat: &Mat,
    rep: &Rep,
    h: usize,
    t: &FieldTower,
) -> Result<TwistedConjSolution> {
    let n = rep.n;
    let gamma = gamma_perm(rep);
    // tau = gamma t_{kappa,n} gamma^{-1}: diagonal pi-exponents permuted by gamma
    let tau: Vec<i64> = {
        let mut v = vec![0i64; n];
        for j in 0..n {
            v[gamma.perm[j]] = rep.monomial.pexp[j];
        }
        v
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                if a_mat.at(i, j) != &TruncElem::one(t, h) {
                    return Err(Error::InvalidParameter(
                        "input is not unipotent on the diagonal".into(),
                    ));
                }
            } else if i < j && !a_mat.at(i, j).is_zero(t) {
                return Err(Error::InvalidParameter(
                    "input is not lower triangular".into(),
                ));
            }
        }
    }
    let zero = TruncElem::zero(t, h);
    // b[i][j] (0-based, i > j) entries of x; the last row of x is zero
    let mut b = vec![vec![zero; n]; n];
    // Back substitution: knowing row i of x determines row i-1 via
    // sigma(b[i-1][j-1]) pi^{tau[i-1]-tau[j-1]} = b[i][j] + sum_k b[i][k] a[k][j] + a[i][j].
    for i in (2..n).rev() {
        for j in 1..i {
            let mut rhs = b[i][j].clone();
            for k in j + 1..i {
                rhs = rhs.add(&b[i][k].mul(a_mat.at(k, j), t), t);
            }
            rhs = rhs.add(a_mat.at(i, j), t);
            let d = tau[j - 1] - tau[i - 1];
            let shifted = if d >= 0 {
                rhs.mul_pi(d as usize, t)
            } else {
                rhs.div_pi((-d) as usize, t)
                    .map_err(|_| {
                        Error::ConsistencyFailure(format!(
                            "pattern violation solving entry ({i},{j})"
                        ))
                    })?
                    .lift(h)
            };
            b[i - 1][j - 1] = shifted.sigma(-1, t);
        }
    }
    let mut x = Mat::identity(t, n, h);
    for i in 1..n.saturating_sub(1) {
        for j in 0..i {
            *x.at_mut(i, j) = b[i][j].clone();
        }
    }
    // first column of g from the remaining equations
    let xa = x.mul(a_mat, t);
    let mut g = Mat::identity(t, n, h);
    for i in 1..n {
        *g.at_mut(i, 0) = xa.at(i, 0).clone();
    }
    // verification: x A = g F_0(x) with F_0 = conjugation by b_0 tau after sigma
    let f0x = {
        let b0tau = MonomialMat {
            perm: (0..n).map(|j| (j + 1) % n).collect(),
            pexp: tau.clone(),
        };
        b0tau.conj(&x.sigma(1, t), t)?
    };
    if xa != g.mul(&f0x, t) {
        return Err(Error::ConsistencyFailure(
            "twisted-conjugation back substitution failed verification".into(),
        ));
    }
    Ok(TwistedConjSolution { x, g })
}

/// N_h^{h-1} for the standard parabolic given by a partition of n': the
/// top-level unipotents diag(pi^{h-1} u, pi^{h-1} sigma^{l0} u, ...)
/// in the blocks above the parabolic diagonal. Returns (elements, J).
pub fn unipotent_radical_top(
    rep: &Rep,
    partition: &[usize],
    h: usize,
    t: &FieldTower,
) -> Result<(Vec<Mat>, Vec<(usize, usize)>)> {
    if partition.iter().sum::<usize>() != rep.nprime || partition.iter().any(|&p| p == 0) {
        return Err(Error::InvalidParameter(format!(
            "partition {partition:?} does not sum to n' = {}",
            rep.nprime
        )));
    }
    let mut part_of = Vec::with_capacity(rep.nprime);
    for (pi, &len) in partition.iter().enumerate() {
        for _ in 0..len {
            part_of.push(pi);
        }
    }
    let j_set: Vec<(usize, usize)> = (0..rep.nprime)
        .flat_map(|i| (0..rep.nprime).map(move |j| (i, j)))
        .filter(|&(i, j)| part_of[i] < part_of[j])
        .collect();
    let subfield = t.subfield_elements(rep.n0);
    let qn0 = subfield.len();
    let total = (qn0 as u64).pow(j_set.len() as u32);
    if total > 1 << 16 {
        return Err(Error::BudgetExceeded(format!(
            "unipotent radical of size {total}"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut digits = vec![0usize; j_set.len()];
    loop {
        let mut g = Mat::identity(t, rep.n, h);
        for (k, &(bi, bj)) in j_set.iter().enumerate() {
            let u = subfield[digits[k]];
            let mut cur = u;
            for pos in 0..rep.n0 {
                let (r, c) = (bi * rep.n0 + pos, bj * rep.n0 + pos);
                *g.at_mut(r, c) = TruncElem::monomial(t, cur, h - 1, h);
                cur = t.sigma_pow(cur, rep.l0 as i64);
            }
        }
        out.push(g);
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok((out, j_set));
            }
            digits[i] += 1;
            if digits[i] < qn0 {
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
    use crate::group::table::{mat_key, GroupTable};

    #[test]
    fn normalizer_order() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let rep = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        assert_eq!(normalizer_quotient(&rep, 1, &t).unwrap().len(), 2);
        let t2 = FieldTower::new(2, 1, 2, 1, 1).unwrap();
        let rep = Rep::new(2, 1, RepKind::Coxeter).unwrap();
        assert_eq!(normalizer_quotient(&rep, 1, &t2).unwrap().len(), 1);
    }

    #[test]
    fn normalizer_order_n4_kappa2() {
        let t = FieldTower::new(2, 1, 2, 2, 1).unwrap();
        let rep = Rep::new(4, 2, RepKind::Coxeter).unwrap();
        assert_eq!(normalizer_quotient(&rep, 1, &t).unwrap().len(), 2);
    }

    #[test]
    fn galois_lift_conjugates_torus() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let rep = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        let h = 2;
        let table = GroupTable::build(&rep, h, &t).unwrap();
        for j in 0..rep.nprime {
            let g = galois_lift(&rep, j, h, &t).unwrap();
            let gi = g.inv(&t).unwrap();
            for (ti, u) in table.torus.iter().zip(&table.torus_units) {
                let tm = &table.elements[*ti];
                let conj = g.mul(tm, &t).mul(&gi, &t);
                let expect = rep.diag_embed(&u.sigma((rep.n0 * j) as i64, &t), &t);
                assert_eq!(mat_key(&conj, &t), mat_key(&expect, &t), "j = {j}");
            }
        }
        let g0 = galois_lift(&rep, 0, h, &t).unwrap();
        assert_eq!(g0, Mat::identity(&t, 2, h));
    }

    #[test]
    fn integral_conjugator_kappa_coprime() {
        // n = 3, kappa = 1: the representatives coincide, identity works
        let t = FieldTower::new(2, 1, 3, 1, 1).unwrap();
        let g = find_integral_conjugator(3, 1, 2, &t).unwrap();
        assert!(g.det(&t).is_unit(&t));
    }

    #[test]
    fn integral_conjugator_kappa0() {
        // b_cox = b_0, b_sp = Id: a genuine semilinear solve
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let g = find_integral_conjugator(2, 0, 2, &t).unwrap();
        let cox = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        let sp = Rep::new(2, 0, RepKind::Special).unwrap();
        let lhs = cox.matrix(&t, 2).mul(&g.sigma(1, &t), &t);
        let rhs = g.mul(&sp.matrix(&t, 2), &t);
        assert_eq!(lhs, rhs);
        assert!(g.det(&t).is_unit(&t));
    }

    #[test]
    fn integral_conjugator_n4_kappa2() {
        let t = FieldTower::new(2, 1, 2, 2, 1).unwrap();
        let g = find_integral_conjugator(4, 2, 2, &t).unwrap();
        let cox = Rep::new(4, 2, RepKind::Coxeter).unwrap();
        let sp = Rep::new(4, 2, RepKind::Special).unwrap();
        let lhs = cox.matrix(&t, 2).mul(&g.sigma(1, &t), &t);
        let rhs = g.mul(&sp.matrix(&t, 2), &t);
        assert_eq!(lhs, rhs);
        assert!(g.det(&t).is_unit(&t));
    }

    #[test]
    fn twisted_conjugation_identity() {
        let t = FieldTower::new(2, 1, 1, 2, 1).unwrap();
        let rep = Rep::new(2, 0, RepKind::Coxeter).unwrap();
        let h = 2;
        let a = Mat::identity(&t, 2, h);
        let sol = solve_twisted_conjugation(&a, &rep, h, &t).unwrap();
        assert_eq!(sol.x, Mat::identity(&t, 2, h));
        assert_eq!(sol.g, Mat::identity(&t, 2, h));
    }

    #[test]
    fn gamma_perm_example() {
        // n = 3, kappa = 2, e = 2: gamma is the transposition (2 3) on 1-based indices
        let rep = Rep::new(3, 2, RepKind::Coxeter).unwrap();
        let g = gamma_perm(&rep);
        assert_eq!(g.perm, vec![0, 2, 1]);
    }

    #[test]
    fn unipotent_radical_count() {
        // n = 4, kappa = 2, maximal parabolic of n' = 2, h = 1: |N_1^0| = q^{n0} = 4
        let t = FieldTower::new(2, 1, 2, 2, 1).unwrap();
        let rep = Rep::new(4, 2, RepKind::Special).unwrap();
        let (nh, j) = unipotent_radical_top(&rep, &[1, 1], 1, &t).unwrap();
        assert_eq!(j.len(), 1);
        assert_eq!(nh.len(), 4);
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
