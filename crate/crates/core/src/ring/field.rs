//! Finite field arithmetic with two backends: Zech logarithm tables for
//! small fields and packed polynomial arithmetic above the table threshold.

use std::fmt;

use crate::error::{Error, Result};

/// Fields with at most this many elements use Zech logarithm tables.
pub const ZECH_LIMIT: u64 = 1 << 20;

/// Hard cap on the ambient field degree over the prime field.
pub const MAX_PRIME_DEGREE: usize = 255;

const WORDS: usize = 4;

/// A finite field element. Plain data; all arithmetic goes through [`FqField`].
///
/// For the Zech backend `w[0]` holds 1 + the discrete logarithm of the
/// element (0 encodes the zero element); for the polynomial backends the
/// words hold the packed coefficient vector. The all-zero word array is the
/// zero element in every backend.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqElem {
    w: [u64; WORDS],
}

const LOG_ZERO: u64 = u64::MAX;

impl FqElem {
    pub const ZERO: FqElem = FqElem { w: [0; WORDS] };

    /// Zech encoding: LOG_ZERO -> 0, log k -> k + 1.
    fn from_log(l: u64) -> Self {
        let mut w = [0u64; WORDS];
        w[0] = if l == LOG_ZERO { 0 } else { l + 1 };
        FqElem { w }
    }

    /// Zech decoding: 0 -> LOG_ZERO, k + 1 -> k.
    fn to_log(self) -> u64 {
        if self.w[0] == 0 {
            LOG_ZERO
        } else {
            self.w[0] - 1
        }
    }
}

impl fmt::Debug for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FqElem({:x},{:x},{:x},{:x})", self.w[0], self.w[1], self.w[2], self.w[3])
    }
}

enum Backend {
    /// Element = exponent of the generator, `LOG_ZERO` encodes 0.
    Zech {
        /// zech[k] = log(1 + g^k), or LOG_ZERO when 1 + g^k = 0.
        zech: Vec<u64>,
        /// poly-packed index -> log (for conversions and enumeration).
        log_of_packed: Vec<u64>,
        /// log -> poly-packed index.
        packed_of_log: Vec<u64>,
        /// log of -1 (0 in characteristic 2).
        log_minus_one: u64,
    },
    /// Characteristic 2, coefficients bit-packed little-endian.
    Poly2 {
        /// x^degree reduced mod the defining polynomial, packed.
        red: [u64; WORDS],
    },
    /// Odd characteristic, 8 bits per coefficient, little-endian.
    PolyP {
        red: [u64; WORDS],
    },
}

/// A finite field `F_{p^degree}` with a fixed defining polynomial.
pub struct FqField {
    pub p: u64,
    /// Degree over the prime field.
    pub degree: usize,
    /// Number of elements (only when it fits in u64, which the budget enforces
    /// for Zech fields; polynomial fields may exceed u64 and store 0 here).
    pub order: u64,
    /// True field order as (p, degree); order == 0 means it overflows u64.
    backend: Backend,
    /// Monic defining polynomial, coefficients in 0..p, length degree+1.
    pub modulus: Vec<u64>,
    /// Matrix of x -> x^p on the basis 1..x^{degree-1}: image of each basis vector.
    frob_basis: Vec<FqElem>,
    /// Packed generator of the multiplicative group (poly representation),
    /// also stored as an element.
    generator: FqElem,
    /// Prime factors of p^degree - 1.
    pub unit_order_factors: Vec<num_bigint::BigUint>,
}

fn pow_u64(b: u64, e: u32) -> Option<u64> {
    b.checked_pow(e)
}

impl FqField {
    /// Builds `F_{p^degree}` with the lexicographically least monic irreducible
    /// defining polynomial (coefficients compared from degree 0 upward).
    pub fn new(p: u64, degree: usize) -> Result<FqField> {
        if !is_prime_u64(p) {
            return Err(Error::NotPrime(p));
        }
        if degree == 0 || degree > MAX_PRIME_DEGREE {
            return Err(Error::BudgetExceeded(format!(
                "field degree {degree} outside supported range 1..={MAX_PRIME_DEGREE}"
            )));
        }
        if p > 2 && degree > 64 {
            return Err(Error::BudgetExceeded(format!(
                "odd characteristic fields limited to degree 64, got {degree}"
            )));
        }
        let modulus = least_irreducible(p, degree);
        let order = pow_u64(p, degree as u32).unwrap_or(0);

        let backend = if order != 0 && order <= ZECH_LIMIT {
            build_zech(p, degree, &modulus)
        } else if p == 2 {
            let mut red = [0u64; WORDS];
            // x^degree = -(lower part of modulus)
            for (i, &c) in modulus.iter().enumerate().take(degree) {
                if c != 0 {
                    red[i / 64] |= 1 << (i % 64);
                }
            }
            Backend::Poly2 { red }
        } else {
            let mut red = [0u64; WORDS];
            for (i, &c) in modulus.iter().enumerate().take(degree) {
                // x^degree = -c_i x^i
                let neg = (p - c) % p;
                red[i / 8] |= neg << (8 * (i % 8));
            }
            Backend::PolyP { red }
        };

        let mut field = FqField {
            p,
            degree,
            order,
            backend,
            modulus,
            frob_basis: Vec::new(),
            generator: FqElem::ZERO,
            unit_order_factors: Vec::new(),
        };
        field.frob_basis = (0..degree)
            .map(|i| {
                let xi = field.monomial(i);
                field.pow_u64_elem(xi, p)
            })
            .collect();
        field.unit_order_factors = factor_unit_order(p, degree);
        field.generator = field.find_generator();
        Ok(field)
    }

    pub fn zero(&self) -> FqElem {
        FqElem::ZERO
    }

    pub fn one(&self) -> FqElem {
        match self.backend {
            Backend::Zech { .. } => FqElem::from_log(0),
            _ => self.from_coeffs(&[1]),
        }
    }

    pub fn generator(&self) -> FqElem {
        self.generator
    }

    pub fn is_zero(&self, a: FqElem) -> bool {
        a == FqElem::ZERO
    }

    /// Element from prime-field coefficients (little-endian in the basis powers).
    pub fn from_coeffs(&self, coeffs: &[u64]) -> FqElem {
        assert!(coeffs.len() <= self.degree);
        let mut w = [0u64; WORDS];
        match self.backend {
            Backend::Poly2 { .. } => {
                for (i, &c) in coeffs.iter().enumerate() {
                    if c % 2 != 0 {
                        w[i / 64] |= 1 << (i % 64);
                    }
                }
                FqElem { w }
            }
            Backend::PolyP { .. } => {
                for (i, &c) in coeffs.iter().enumerate() {
                    w[i / 8] |= (c % self.p) << (8 * (i % 8));
                }
                FqElem { w }
            }
            Backend::Zech {
                ref log_of_packed, ..
            } => {
                let mut idx = 0u64;
                for (i, &c) in coeffs.iter().enumerate() {
                    idx += (c % self.p) * pow_u64(self.p, i as u32).unwrap();
                }
                FqElem::from_log(log_of_packed[idx as usize])
            }
        }
    }

    /// Prime-field coefficient vector of an element, length = degree.
    pub fn coeffs(&self, a: FqElem) -> Vec<u64> {
        match self.backend {
            Backend::Poly2 { .. } => (0..self.degree)
                .map(|i| (a.w[i / 64] >> (i % 64)) & 1)
                .collect(),
            Backend::PolyP { .. } => (0..self.degree)
                .map(|i| (a.w[i / 8] >> (8 * (i % 8))) & 0xff)
                .collect(),
            Backend::Zech { ref packed_of_log, .. } => {
                let mut idx = if a == FqElem::ZERO {
                    0
                } else {
                    packed_of_log[a.to_log() as usize]
                };
                let mut out = Vec::with_capacity(self.degree);
                for _ in 0..self.degree {
                    out.push(idx % self.p);
                    idx /= self.p;
                }
                out
            }
        }
    }

    fn monomial(&self, i: usize) -> FqElem {
        let mut c = vec![0u64; i + 1];
        c[i] = 1;
        self.from_coeffs(&c)
    }

    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        match self.backend {
            Backend::Poly2 { .. } => {
                let mut w = [0u64; WORDS];
                for i in 0..WORDS {
                    w[i] = a.w[i] ^ b.w[i];
                }
                FqElem { w }
            }
            Backend::PolyP { .. } => {
                let mut w = [0u64; WORDS];
                for i in 0..self.degree {
                    let x = (a.w[i / 8] >> (8 * (i % 8))) & 0xff;
                    let y = (b.w[i / 8] >> (8 * (i % 8))) & 0xff;
                    w[i / 8] |= ((x + y) % self.p) << (8 * (i % 8));
                }
                FqElem { w }
            }
            Backend::Zech {
                ref zech,
                log_minus_one,
                ..
            } => {
                let (la, lb) = (a.to_log(), b.to_log());
                if la == LOG_ZERO {
                    return b;
                }
                if lb == LOG_ZERO {
                    return a;
                }
                let q1 = self.order - 1;
                // a + b = g^la (1 + g^{lb-la})
                let d = (lb + q1 - la) % q1;
                if d == log_minus_one && self.p != 2 {
                    return FqElem::from_log(LOG_ZERO);
                }
                if self.p == 2 && d == 0 {
                    return FqElem::from_log(LOG_ZERO);
                }
                let z = zech[d as usize];
                if z == LOG_ZERO {
                    FqElem::from_log(LOG_ZERO)
                } else {
                    FqElem::from_log((la + z) % q1)
                }
            }
        }
    }

    pub fn neg(&self, a: FqElem) -> FqElem {
        if self.p == 2 {
            return a;
        }
        match self.backend {
            Backend::PolyP { .. } => {
                let mut w = [0u64; WORDS];
                for i in 0..self.degree {
                    let x = (a.w[i / 8] >> (8 * (i % 8))) & 0xff;
                    w[i / 8] |= ((self.p - x) % self.p) << (8 * (i % 8));
                }
                FqElem { w }
            }
            Backend::Zech { log_minus_one, .. } => {
                if a == FqElem::ZERO {
                    a
                } else {
                    FqElem::from_log((a.to_log() + log_minus_one) % (self.order - 1))
                }
            }
            Backend::Poly2 { .. } => unreachable!(),
        }
    }

    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        match self.backend {
            Backend::Zech { .. } => {
                if a == FqElem::ZERO || b == FqElem::ZERO {
                    FqElem::ZERO
                } else {
                    FqElem::from_log((a.to_log() + b.to_log()) % (self.order - 1))
                }
            }
            Backend::Poly2 { red } => {
                if a == FqElem::ZERO || b == FqElem::ZERO {
                    return FqElem::ZERO;
                }
                let mut acc = [0u64; WORDS];
                let mut shifted = a.w;
                let d = self.degree;
                for i in 0..d {
                    if (b.w[i / 64] >> (i % 64)) & 1 == 1 {
                        for k in 0..WORDS {
                            acc[k] ^= shifted[k];
                        }
                    }
                    if i + 1 < d {
                        // shifted <<= 1, reduce if degree reached
                        let mut carry = 0u64;
                        for k in 0..WORDS {
                            let nc = shifted[k] >> 63;
                            shifted[k] = (shifted[k] << 1) | carry;
                            carry = nc;
                        }
                        if (shifted[d / 64] >> (d % 64)) & 1 == 1 {
                            shifted[d / 64] &= !(1 << (d % 64));
                            for k in 0..WORDS {
                                shifted[k] ^= red[k];
                            }
                        }
                    }
                }
                FqElem { w: acc }
            }
            Backend::PolyP { red } => {
                let d = self.degree;
                let get = |w: &[u64; WORDS], i: usize| (w[i / 8] >> (8 * (i % 8))) & 0xff;
                let mut acc = [0u64; WORDS];
                let mut shifted = a.w;
                for i in 0..d {
                    let bi = get(&b.w, i);
                    if bi != 0 {
                        let mut nw = [0u64; WORDS];
                        for j in 0..d {
                            let s = (get(&acc, j) + bi * get(&shifted, j)) % self.p;
                            nw[j / 8] |= s << (8 * (j % 8));
                        }
                        acc = nw;
                    }
                    if i + 1 < d {
                        // shifted = shifted * x mod modulus
                        let top = get(&shifted, d - 1);
                        let mut nw = [0u64; WORDS];
                        for j in (1..d).rev() {
                            let lo = get(&shifted, j - 1);
                            let extra = if top != 0 { top * get(&red, j) } else { 0 };
                            nw[j / 8] |= ((lo + extra) % self.p) << (8 * (j % 8));
                        }
                        if top != 0 {
                            nw[0] |= (top * get(&red, 0)) % self.p;
                        }
                        shifted = nw;
                    }
                }
                FqElem { w: acc }
            }
        }
    }

    pub fn pow_u64_elem(&self, a: FqElem, mut e: u64) -> FqElem {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Exponentiation with arbitrary-precision exponent (for generator checks).
    pub fn pow_big(&self, a: FqElem, e: &num_bigint::BigUint) -> FqElem {
        use num_traits::Zero;
        let mut base = a;
        let mut acc = self.one();
        let mut e = e.clone();
        while !e.is_zero() {
            if e.bit(0) {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: FqElem) -> FqElem {
        assert!(!self.is_zero(a), "inverse of zero");
        match self.backend {
            Backend::Zech { .. } => {
                let q1 = self.order - 1;
                FqElem::from_log((q1 - a.to_log()) % q1)
            }
            _ => {
                // a^{p^d - 2}
                let e = self.unit_order_big() - 1u32;
                self.pow_big(a, &e)
            }
        }
    }

    pub fn unit_order_big(&self) -> num_bigint::BigUint {
        use num_traits::One;
        let p = num_bigint::BigUint::from(self.p);
        num_traits::pow::pow(p, self.degree) - num_bigint::BigUint::one()
    }

    /// x -> x^p, the absolute Frobenius.
    pub fn frob_p(&self, a: FqElem) -> FqElem {
        match self.backend {
            Backend::Zech { .. } => {
                if a == FqElem::ZERO {
                    a
                } else {
                    let q1 = self.order - 1;
                    FqElem::from_log(((a.to_log() as u128 * self.p as u128) % q1 as u128) as u64)
                }
            }
            _ => {
                // linear in the coefficients: sum c_i * frob_basis[i]
                let coeffs = self.coeffs(a);
                let mut acc = self.zero();
                for (i, &c) in coeffs.iter().enumerate() {
                    if c != 0 {
                        let mut t = self.frob_basis[i];
                        if c > 1 {
                            t = self.scalar_mul(t, c);
                        }
                        acc = self.add(acc, t);
                    }
                }
                acc
            }
        }
    }

    fn scalar_mul(&self, a: FqElem, c: u64) -> FqElem {
        let mut acc = self.zero();
        let mut t = a;
        let mut c = c % self.p;
        while c > 0 {
            if c & 1 == 1 {
                acc = self.add(acc, t);
            }
            t = self.add(t, t);
            c >>= 1;
        }
        acc
    }

    /// Finds the enumeration-least multiplicative generator.
    fn find_generator(&self) -> FqElem {
        if self.degree == 1 && self.p == 2 {
            return self.one();
        }
        let factors = self.unit_order_factors.clone();
        let total = self.unit_order_big();
        // enumerate elements in coefficient order, smallest first
        let mut idx = num_bigint::BigUint::from(1u32);
        loop {
            let cand = self.element_from_index(&idx);
            if !self.is_zero(cand) {
                let mut ok = true;
                for f in &factors {
                    let e = &total / f;
                    if self.pow_big(cand, &e) == self.one() {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    return cand;
                }
            }
            idx += 1u32;
        }
    }

    /// Index -> element with base-p digits as coefficients (low degree first).
    pub fn element_from_index(&self, idx: &num_bigint::BigUint) -> FqElem {
        use num_integer::Integer;
        let p = num_bigint::BigUint::from(self.p);
        let mut rest = idx.clone();
        let mut coeffs = Vec::with_capacity(self.degree);
        for _ in 0..self.degree {
            let (q, r) = rest.div_rem(&p);
            let digits = r.to_u64_digits();
            coeffs.push(if digits.is_empty() { 0 } else { digits[0] });
            rest = q;
        }
        self.from_coeffs(&coeffs)
    }

    /// Index -> element, fast path for u64 indices.
    pub fn element_from_u64(&self, idx: u64) -> FqElem {
        match self.backend {
            Backend::Poly2 { .. } => {
                debug_assert!(self.degree >= 64 || idx < (1u64 << self.degree));
                let mut w = [0u64; WORDS];
                w[0] = idx;
                FqElem { w }
            }
            Backend::PolyP { .. } => {
                let mut rest = idx;
                let mut w = [0u64; WORDS];
                for i in 0..self.degree {
                    w[i / 8] |= (rest % self.p) << (8 * (i % 8));
                    rest /= self.p;
                    if rest == 0 {
                        break;
                    }
                }
                FqElem { w }
            }
            Backend::Zech { ref log_of_packed, .. } => FqElem::from_log(log_of_packed[idx as usize]),
        }
    }

    /// Enumerates all field elements. Only valid when the order fits in u64.
    pub fn elements(&self) -> impl Iterator<Item = FqElem> + '_ {
        assert!(self.order != 0, "field too large to enumerate");
        (0..self.order).map(move |i| self.element_from_u64(i))
    }

    /// Discrete log base the field generator; None for 0. Pohlig-Hellman.
    pub fn dlog(&self, a: FqElem) -> Option<num_bigint::BigUint> {
        use num_traits::{One, Zero};
        if self.is_zero(a) {
            return None;
        }
        if let Backend::Zech { .. } = self.backend {
            return Some(num_bigint::BigUint::from(a.to_log()));
        }
        let n = self.unit_order_big();
        // split n into coprime prime-power parts
        let mut parts: Vec<(num_bigint::BigUint, num_bigint::BigUint)> = Vec::new();
        let mut seen: Vec<num_bigint::BigUint> = Vec::new();
        for f in &self.unit_order_factors {
            if seen.contains(f) {
                continue;
            }
            seen.push(f.clone());
            let mut pe = num_bigint::BigUint::one();
            let mut rest = n.clone();
            loop {
                let (q, r) = num_integer::Integer::div_rem(&rest, f);
                if r.is_zero() {
                    pe *= f;
                    rest = q;
                } else {
                    break;
                }
            }
            parts.push((f.clone(), pe));
        }
        let mut residues: Vec<(num_bigint::BigUint, num_bigint::BigUint)> = Vec::new();
        for (f, pe) in &parts {
            let cof = &n / pe;
            let gp = self.pow_big(self.generator, &cof);
            let ap = self.pow_big(a, &cof);
            // solve gp^x = ap in the order-pe subgroup, digit by digit
            let mut x = num_bigint::BigUint::zero();
            let mut cur_exp = pe.clone();
            let gamma_base = self.pow_big(gp, &(pe / f));
            let mut k = num_bigint::BigUint::one();
            while &k < pe {
                k *= f;
            }
            let mut digit_weight = num_bigint::BigUint::one();
            let mut acc = ap;
            while cur_exp > num_bigint::BigUint::one() {
                cur_exp = &cur_exp / f;
                let probe = self.pow_big(acc, &cur_exp);
                // probe = gamma_base^{d} for digit d in 0..f
                let mut d = num_bigint::BigUint::zero();
                let mut t = self.one();
                loop {
                    if t == probe {
                        break;
                    }
                    t = self.mul(t, gamma_base);
                    d += 1u32;
                    assert!(&d <= f, "dlog digit search failed");
                }
                if !d.is_zero() {
                    x += &d * &digit_weight;
                    let e = (&n - (&d * &digit_weight) % pe) % pe;
                    // divide out gp^{d*weight}
                    let adj = self.pow_big(gp, &e);
                    acc = self.mul(acc, adj);
                }
                digit_weight *= f;
            }
            residues.push((x, pe.clone()));
        }
        // CRT
        let mut x = num_bigint::BigUint::zero();
        let mut modulus = num_bigint::BigUint::one();
        for (r, m) in residues {
            let (g, p_inv) = mod_inverse(&modulus, &m);
            assert!(g.is_one());
            let diff = (&r + &m - (&x % &m)) % &m;
            x += &modulus * ((diff * p_inv) % &m);
            modulus *= &m;
        }
        Some(x % &n)
    }
}

fn mod_inverse(
    a: &num_bigint::BigUint,
    m: &num_bigint::BigUint,
) -> (num_bigint::BigUint, num_bigint::BigUint) {
    use num_bigint::BigInt;
    use num_traits::{One, Signed, Zero};
    let (mut r0, mut r1) = (BigInt::from(a.clone()), BigInt::from(m.clone()));
    let (mut s0, mut s1) = (BigInt::one(), BigInt::zero());
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r2);
        let s2 = &s0 - &q * &s1;
        s0 = std::mem::replace(&mut s1, s2);
    }
    let m_int = BigInt::from(m.clone());
    let mut s = s0 % &m_int;
    if s.is_negative() {
        s += &m_int;
    }
    (
        r0.to_biguint().unwrap(),
        s.to_biguint().unwrap_or_default(),
    )
}

fn build_zech(p: u64, degree: usize, modulus: &[u64]) -> Backend {
    let order = pow_u64(p, degree as u32).unwrap();
    let q1 = order - 1;
    // polynomial arithmetic on packed base-p indices
    let mulx = |idx: u64| -> u64 {
        // multiply by x mod modulus, index packed base p low-first
        let mut coeffs = vec![0u64; degree];
        let mut rest = idx;
        for c in coeffs.iter_mut() {
            *c = rest % p;
            rest /= p;
        }
        let top = coeffs[degree - 1];
        let mut out = vec![0u64; degree];
        for i in (1..degree).rev() {
            out[i] = (coeffs[i - 1] + (p - modulus[i] % p) % p * top) % p;
        }
        out[0] = ((p - modulus[0] % p) % p * top) % p;
        let mut packed = 0u64;
        for i in (0..degree).rev() {
            packed = packed * p + out[i];
        }
        packed
    };
    // find a generator by brute force over candidate packed indices
    let factors = factor_u64(q1);
    let powmod = |base: u64, mut e: u64| -> u64 {
        // multiplicative power in packed-index arithmetic via repeated squaring
        // using a mul on packed indices
        let mulpk = |a: u64, b: u64| -> u64 {
            // schoolbook: decompose b, repeatedly multiply a by x
            let mut acc = 0u64; // zero polynomial
            let mut shifted = a;
            let mut rest = b;
            for _ in 0..degree {
                let digit = rest % p;
                rest /= p;
                if digit != 0 {
                    // acc += digit * shifted
                    let mut aa = acc;
                    for _ in 0..digit {
                        aa = addpk(aa, shifted, p, degree);
                    }
                    acc = aa;
                }
                shifted = mulx(shifted);
            }
            acc
        };
        let mut acc = 1u64;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulpk(acc, b);
            }
            b = mulpk(b, b);
            e >>= 1;
        }
        acc
    };
    let mut gen_packed = 0;
    for cand in 2..order {
        if cand % p == cand && degree > 1 {
            // prime-field elements can't generate extensions; still check order cheaply
        }
        let mut ok = true;
        for &f in &factors {
            if powmod(cand, q1 / f) == 1 {
                ok = false;
                break;
            }
        }
        if ok {
            gen_packed = cand;
            break;
        }
    }
    assert!(gen_packed != 0, "no generator found");
    let mut log_of_packed = vec![LOG_ZERO; order as usize];
    let mut packed_of_log = vec![0u64; q1 as usize];
    let mut cur = 1u64;
    for k in 0..q1 {
        log_of_packed[cur as usize] = k;
        packed_of_log[k as usize] = cur;
        // cur *= gen
        let mut acc = 0u64;
        let mut shifted = cur;
        let mut rest = gen_packed;
        for _ in 0..degree {
            let digit = rest % p;
            rest /= p;
            if digit != 0 {
                for _ in 0..digit {
                    acc = addpk(acc, shifted, p, degree);
                }
            }
            shifted = mulx(shifted);
        }
        cur = acc;
    }
    assert_eq!(cur, 1, "generator order mismatch");
    // zech table: zech[k] = log(1 + g^k)
    let mut zech = vec![LOG_ZERO; q1 as usize];
    for k in 0..q1 {
        let v = addpk(1, packed_of_log[k as usize], p, degree);
        zech[k as usize] = log_of_packed[v as usize];
    }
    let log_minus_one = if p == 2 {
        0
    } else {
        // -1 = g^{(q-1)/2}
        q1 / 2
    };
    Backend::Zech {
        zech,
        log_of_packed,
        packed_of_log,
        log_minus_one,
    }
}

fn addpk(a: u64, b: u64, p: u64, degree: usize) -> u64 {
    let mut out = 0u64;
    let mut mul = 1u64;
    let (mut ra, mut rb) = (a, b);
    for _ in 0..degree {
        let s = (ra % p + rb % p) % p;
        out += s * mul;
        mul *= p;
        ra /= p;
        rb /= p;
    }
    out
}

/// Lexicographically least monic irreducible polynomial of the given degree,
/// coefficient tuples compared from the constant term upward.
pub fn least_irreducible(p: u64, degree: usize) -> Vec<u64> {
    if degree == 1 {
        return vec![0, 1]; // x
    }
    let mut coeffs = vec![0u64; degree + 1];
    coeffs[degree] = 1;
    // iterate (c_{d-1}, ..., c_1, c_0) as base-p counter with c_0 most significant
    let total = num_bigint::BigUint::from(p).pow(degree as u32);
    let mut k = num_bigint::BigUint::from(0u32);
    use num_integer::Integer;
    while &k < &total {
        // digits: first digit = c_0, then c_1, ...
        let mut rest = k.clone();
        let pb = num_bigint::BigUint::from(p);
        for i in (0..degree).rev() {
            let (q, r) = rest.div_rem(&pb);
            coeffs[i] = r.to_u64_digits().first().copied().unwrap_or(0);
            rest = q;
        }
        if is_irreducible(p, &coeffs) {
            return coeffs;
        }
        k += 1u32;
    }
    unreachable!("irreducible polynomial of degree {degree} over F_{p} exists");
}

/// Irreducibility over F_p via x^{p^d} = x together with gcd conditions.
fn is_irreducible(p: u64, f: &[u64]) -> bool {
    let d = f.len() - 1;
    if f[0] == 0 {
        return d == 1;
    }
    // x^{p^{d/r}} - x must be coprime to f for prime r | d; x^{p^d} = x mod f.
    // the chain x^{p^k} comes from repeated p-th powering mod f
    let mut frob_pows = Vec::with_capacity(d + 1);
    frob_pows.push(poly_x(p)); // x
    let mut cur = poly_x(p);
    for _ in 0..d {
        let mut acc = cur.clone();
        // acc = cur^p mod f by square-and-multiply on the exponent p
        let mut result = vec![1u64];
        let mut base = acc.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                result = polymod_mul(p, f, &result, &base);
            }
            base = polymod_mul(p, f, &base, &base);
            e >>= 1;
        }
        acc = result;
        frob_pows.push(acc.clone());
        cur = acc;
    }
    // check x^{p^d} == x
    if frob_pows[d] != frob_pows[0] {
        return false;
    }
    let mut dd = d;
    let mut primes = Vec::new();
    let mut t = 2;
    while t * t <= dd {
        if dd % t == 0 {
            primes.push(t);
            while dd % t == 0 {
                dd /= t;
            }
        }
        t += 1;
    }
    if dd > 1 {
        primes.push(dd);
    }
    for r in primes {
        let e = d / r;
        // gcd(x^{p^e} - x, f) must be 1
        let mut g = frob_pows[e].clone();
        // subtract x
        if g.len() < 2 {
            g.resize(2, 0);
        }
        g[1] = (g[1] + p - 1) % p;
        trim(&mut g);
        if poly_gcd_deg(p, &g, f) != 0 {
            return false;
        }
    }
    true
}

fn poly_x(_p: u64) -> Vec<u64> {
    vec![0, 1]
}

fn trim(v: &mut Vec<u64>) {
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
}

fn polymod_mul(p: u64, f: &[u64], a: &[u64], b: &[u64]) -> Vec<u64> {
    let d = f.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + ai * bj) % p;
        }
    }
    // reduce mod f
    for i in (d..prod.len()).rev() {
        let c = prod[i];
        if c == 0 {
            continue;
        }
        prod[i] = 0;
        for k in 0..d {
            let sub = (c * f[k]) % p;
            prod[i - d + k] = (prod[i - d + k] + p * p - sub) % p;
        }
    }
    prod.truncate(d.max(1));
    let mut v = prod;
    trim(&mut v);
    v
}

fn poly_gcd_deg(p: u64, a: &[u64], b: &[u64]) -> usize {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while !(b.len() == 1 && b[0] == 0) {
        let r = poly_rem(p, &a, &b);
        a = std::mem::replace(&mut b, r);
    }
    a.len() - 1
}

fn poly_rem(p: u64, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = inv_mod_u64(b[db], p);
    while r.len() - 1 >= db && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        let c = (r[dr] * lead_inv) % p;
        for k in 0..=db {
            let sub = (c * b[k]) % p;
            r[dr - db + k] = (r[dr - db + k] + p * p - sub) % p;
        }
        trim(&mut r);
        if dr == db {
            break;
        }
    }
    trim(&mut r);
    r
}

fn inv_mod_u64(a: u64, p: u64) -> u64 {
    // Fermat
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
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    // deterministic Miller-Rabin for u64
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'outer: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u128(a as u128, d as u128, n as u128);
        if x == 1 || x == (n - 1) as u128 {
            continue;
        }
        for _ in 0..s - 1 {
            x = x * x % n as u128;
            if x == (n - 1) as u128 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn pow_mod_u128(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1u128;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

fn factor_u64(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for p in 2..=3u64 {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
    }
    let mut p = 5;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 2;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Prime factors of p^degree - 1, via the cyclotomic factorization
/// p^d - 1 = prod_{e | d} Phi_e(p) and Pollard rho on each piece.
fn factor_unit_order(p: u64, degree: usize) -> Vec<num_bigint::BigUint> {
    use num_bigint::BigUint;
    let mut pieces: Vec<BigUint> = Vec::new();
    for e in 1..=degree {
        if degree % e == 0 {
            pieces.push(cyclotomic_value(p, e));
        }
    }
    let mut primes: Vec<BigUint> = Vec::new();
    for piece in pieces {
        for f in factor_big(&piece) {
            if !primes.contains(&f) {
                primes.push(f);
            }
        }
    }
    primes.sort();
    primes
}

/// Phi_e(p) as a big integer.
fn cyclotomic_value(p: u64, e: usize) -> num_bigint::BigUint {
    use num_bigint::BigUint;
    use num_traits::One;
    // Phi_e(p) = prod_{d | e} (p^d - 1)^{mu(e/d)}
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for d in 1..=e {
        if e % d != 0 {
            continue;
        }
        let m = moebius(e / d);
        if m == 0 {
            continue;
        }
        let v = num_traits::pow::pow(BigUint::from(p), d) - BigUint::one();
        if m > 0 {
            num *= v;
        } else {
            den *= v;
        }
    }
    &num / &den
}

fn moebius(mut n: usize) -> i32 {
    let mut m = 1i32;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            m = -m;
        }
        p += 1;
    }
    if n > 1 {
        m = -m;
    }
    m
}

fn factor_big(n: &num_bigint::BigUint) -> Vec<num_bigint::BigUint> {
    use num_bigint::BigUint;
    use num_traits::One;
    let mut out = Vec::new();
    let mut n = n.clone();
    if n.is_one() {
        return out;
    }
    for p in 2u64..10000 {
        let pb = BigUint::from(p);
        while (&n % &pb) == BigUint::from(0u32) {
            if !out.contains(&pb) {
                out.push(pb.clone());
            }
            n = &n / &pb;
        }
        if n.is_one() {
            return out;
        }
    }
    // remaining cofactor: rho (fits in u128 for our budgets)
    let digits = n.to_u64_digits();
    assert!(
        digits.len() <= 2,
        "cofactor too large to factor: {} bits",
        n.bits()
    );
    let val: u128 = if digits.len() == 2 {
        (digits[1] as u128) << 64 | digits[0] as u128
    } else {
        digits[0] as u128
    };
    for f in factor_u128(val) {
        let fb = BigUint::from(f);
        if !out.contains(&fb) {
            out.push(fb);
        }
    }
    out
}

fn factor_u128(n: u128) -> Vec<u128> {
    fn rho(n: u128) -> u128 {
        if n % 2 == 0 {
            return 2;
        }
        let mut c = 1u128;
        loop {
            let f = |x: u128| (mul_mod(x, x, n) + c) % n;
            let (mut x, mut y, mut d) = (2u128, 2u128, 1u128);
            while d == 1 {
                x = f(x);
                y = f(f(y));
                d = gcd_u128(x.abs_diff(y), n);
            }
            if d != n {
                return d;
            }
            c += 1;
        }
    }
    fn is_prime_u128(n: u128) -> bool {
        if n < (1 << 63) {
            return is_prime_u64(n as u64);
        }
        // Miller-Rabin with many bases via mul_mod
        let d0 = n - 1;
        let s = d0.trailing_zeros();
        let d = d0 >> s;
        'outer: for &a in &[2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
            if a % n == 0 {
                continue;
            }
            let mut x = pow_mod_wide(a, d, n);
            if x == 1 || x == n - 1 {
                continue;
            }
            for _ in 0..s - 1 {
                x = mul_mod(x, x, n);
                if x == n - 1 {
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
    fn go(n: u128, out: &mut Vec<u128>) {
        if n == 1 {
            return;
        }
        if is_prime_u128(n) {
            if !out.contains(&n) {
                out.push(n);
            }
            return;
        }
        let d = rho(n);
        go(d, out);
        go(n / d, out);
    }
    let mut out = Vec::new();
    go(n, &mut out);
    out
}

fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    // schoolbook double-and-add to avoid overflow
    if let (Some(p), true) = (a.checked_mul(b), m < (1 << 64)) {
        return p % m;
    }
    let mut acc = 0u128;
    let mut a = a % m;
    let mut b = b;
    while b > 0 {
        if b & 1 == 1 {
            acc = (acc + a) % m;
        }
        a = (a << 1) % m;
        b >>= 1;
    }
    acc
}

fn pow_mod_wide(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1u128;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = std::mem::replace(&mut b, t);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_arithmetic() {
        let f = FqField::new(2, 2).unwrap();
        assert_eq!(f.order, 4);
        let g = f.generator();
        assert_ne!(g, f.one());
        assert_eq!(f.pow_u64_elem(g, 3), f.one());
        // g^2 = g + 1 for the least irreducible x^2 + x + 1
        assert_eq!(f.mul(g, g), f.add(g, f.one()));
        assert_eq!(f.frob_p(g), f.mul(g, g));
    }

    #[test]
    fn f9_arithmetic() {
        let f = FqField::new(3, 2).unwrap();
        assert_eq!(f.order, 9);
        let g = f.generator();
        let mut pow = f.one();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..8 {
            pow = f.mul(pow, g);
            seen.insert(f.coeffs(pow));
        }
        assert_eq!(seen.len(), 8);
        for a in f.elements() {
            if !f.is_zero(a) {
                assert_eq!(f.mul(a, f.inv(a)), f.one());
            }
            assert_eq!(f.add(a, f.neg(a)), f.zero());
        }
    }

    #[test]
    fn poly_backend_matches_zech() {
        // degree 25 over F_2 takes the packed polynomial path
        let f = FqField::new(2, 25).unwrap();
        let g = f.generator();
        let e = f.unit_order_big();
        assert_eq!(f.pow_big(g, &e), f.one());
        let a = f.from_coeffs(&[1, 0, 1, 1]);
        let b = f.from_coeffs(&[0, 1, 1]);
        let ab = f.mul(a, b);
        assert_eq!(f.mul(ab, f.inv(b)), a);
        assert_eq!(f.frob_p(f.add(a, b)), f.add(f.frob_p(a), f.frob_p(b)));
        assert_eq!(f.frob_p(f.mul(a, b)), f.mul(f.frob_p(a), f.frob_p(b)));
    }

    #[test]
    fn least_irreducible_examples() {
        // x^2+x+1 over F_2
        assert_eq!(least_irreducible(2, 2), vec![1, 1, 1]);
        // x^2+1 over F_3
        assert_eq!(least_irreducible(3, 2), vec![1, 0, 1]);
    }

    #[test]
    fn dlog_roundtrip_poly() {
        let f = FqField::new(2, 24).unwrap();
        let g = f.generator();
        let a = f.pow_u64_elem(g, 123_456);
        let l = f.dlog(a).unwrap();
        assert_eq!(l, num_bigint::BigUint::from(123_456u64));
    }
}
