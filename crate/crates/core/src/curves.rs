//! Short-Weierstrass elliptic curve data: discriminants, traces of
//! Frobenius via character sums, reduction types, and p >= 5
//! minimalization.

use crate::arith::legendre_reduced;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// `y^2 = x^3 + ax + b` with cached discriminant `-16(4a^3 + 27b^2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllipticCurve {
    a: BigInt,
    b: BigInt,
    disc: BigInt,
}

/// Reduction type at a prime p >= 5 of a model minimal at p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    Good,
    Multiplicative,
    Additive,
}

/// Local data at one prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub p: u64,
    pub a_p: i64,
    pub reduction: Reduction,
}

/// Exact discriminant of `y^2 = x^3 + ax + b`. Callers reject zero.
pub fn discriminant(a: &BigInt, b: &BigInt) -> BigInt {
    BigInt::from(-16) * (BigInt::from(4) * a.pow(3) + BigInt::from(27) * b.pow(2))
}

impl EllipticCurve {
    pub fn new(a: BigInt, b: BigInt) -> Result<Self> {
        let disc = discriminant(&a, &b);
        if disc.is_zero() {
            return Err(Error::SingularCurve { a, b });
        }
        Ok(EllipticCurve { a, b, disc })
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn disc(&self) -> &BigInt {
        &self.disc
    }
}

fn reduce_mod(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits u64")
}

/// Quadratic-residue lookup table for one odd prime; turns the per-x
/// Legendre evaluation of a character sum into an array access.
pub(crate) struct QrTable {
    p: u64,
    // class[v] in {-1, 0, +1} as i8 for v in 0..p
    class: Vec<i8>,
}

impl QrTable {
    pub(crate) fn new(p: u64) -> Self {
        debug_assert!(p % 2 == 1 && p > 1);
        let mut class = vec![-1i8; p as usize];
        class[0] = 0;
        let half = (p - 1) / 2;
        for y in 1..=half {
            let sq = ((y as u128 * y as u128) % p as u128) as usize;
            class[sq] = 1;
        }
        Self { p, class }
    }

    #[inline]
    pub(crate) fn chi(&self, v: u64) -> i64 {
        debug_assert!(v < self.p);
        self.class[v as usize] as i64
    }
}

/// `-sum_x chi(x^3 + ax + b)` for reduced residues a, b mod the odd prime p.
pub(crate) fn trace_kernel(a: u64, b: u64, p: u64, qr: &QrTable) -> i64 {
    let mut sum = 0i64;
    for x in 0..p {
        let x2 = (x as u128 * x as u128) % p as u128;
        let cubic = (x2 * x as u128 + a as u128 * x as u128 + b as u128) % p as u128;
        sum += qr.chi(cubic as u64);
    }
    -sum
}

/// Reduction type at p > 3 from p | disc and p | c4 (c4 = -48a).
pub fn reduction_type(curve: &EllipticCurve, p: u64) -> Result<Reduction> {
    if p <= 3 {
        return Err(Error::SmallPrime(p));
    }
    let disc_mod = reduce_mod(curve.disc(), p);
    if disc_mod != 0 {
        return Ok(Reduction::Good);
    }
    let c4_mod = reduce_mod(&(BigInt::from(-48) * curve.a()), p);
    if c4_mod != 0 {
        Ok(Reduction::Multiplicative)
    } else {
        Ok(Reduction::Additive)
    }
}

/// Trace of Frobenius at p > 3 via the character sum
/// `a_p = -sum_x chi(x^3 + ax + b)`; the model must be minimal at p.
///
/// The same sum classifies bad reduction: it yields the node sign (+-1) on
/// a nodal cubic and 0 on a cuspidal one.
pub fn trace_of_frobenius(curve: &EllipticCurve, p: u64) -> Result<TraceRecord> {
    if p <= 3 {
        return Err(Error::SmallPrime(p));
    }
    if !crate::arith::is_prime_u64(p) {
        return Err(Error::NotOddPrime(p));
    }
    let a = reduce_mod(curve.a(), p);
    let b = reduce_mod(curve.b(), p);
    let qr = QrTable::new(p);
    let a_p = trace_kernel(a, b, p, &qr);
    let reduction = reduction_type(curve, p)?;
    Ok(TraceRecord { p, a_p, reduction })
}

/// Strip powers of p from the model: replace (a, b) by (a/p^4, b/p^6)
/// while p^4 | a and p^6 | b, a zero coefficient passing its test
/// vacuously. Requires p >= 5.
pub fn minimalize_at_p(curve: &EllipticCurve, p: u64) -> EllipticCurve {
    assert!(p >= 5, "minimalization is defined for p >= 5");
    let p4 = BigInt::from(p).pow(4);
    let p6 = BigInt::from(p).pow(6);
    let mut a = curve.a().clone();
    let mut b = curve.b().clone();
    loop {
        let a_ok = a.is_zero() || (&a % &p4).is_zero();
        let b_ok = b.is_zero() || (&b % &p6).is_zero();
        if !(a_ok && b_ok) {
            break;
        }
        a /= &p4;
        b /= &p6;
    }
    EllipticCurve::new(a, b).expect("scaling by p^-4, p^-6 preserves nonsingularity")
}
