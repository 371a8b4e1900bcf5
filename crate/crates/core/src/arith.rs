//! Exact integer and modular arithmetic: prime generation, Legendre
//! symbols, factorization within a 128-bit working range, and
//! arbitrary-precision polynomial evaluation.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::sync::OnceLock;

/// Ascending table of the primes up to a limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes.iter().copied()
    }
}

/// Sieve of Eratosthenes over the odd residues.
pub fn primes_up_to(limit: u64) -> PrimeTable {
    if limit < 2 {
        return PrimeTable { limit, primes: Vec::new() };
    }
    let n = limit as usize;
    // composite[i] marks the odd number 2i + 1.
    let mut composite = vec![false; n / 2 + 1];
    let mut primes = vec![2u64];
    let mut i = 1usize;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = (p * p) / 2;
            while j <= n / 2 {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    for i in 1..=n / 2 {
        let v = 2 * i + 1;
        if v <= n && !composite[i] {
            primes.push(v as u64);
        }
    }
    PrimeTable { limit, primes }
}

/// Shared table used by factorization; covers every desk-scale trial divisor.
pub(crate) fn trial_division_table() -> &'static PrimeTable {
    static TABLE: OnceLock<PrimeTable> = OnceLock::new();
    TABLE.get_or_init(|| primes_up_to(1_000_000))
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Modular exponentiation `base^exp mod m` (m > 0).
pub fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    base %= m;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn miller_rabin_u64(n: u64, witness: u64) -> bool {
    // returns true if n passes the witness (is a probable prime).
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    let mut x = mod_pow(witness % n, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic Miller-Rabin for 64-bit integers.
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
    // This base set is deterministic for all n < 3.3 * 10^24.
    [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
        .iter()
        .all(|&w| miller_rabin_u64(n, w))
}

fn mul_mod_u128(a: u128, b: u128, m: u128) -> u128 {
    // Schoolbook double-and-add; the factorization cofactors this sees are
    // rare enough that the O(log b) loop does not matter.
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

fn mod_pow_u128(mut base: u128, mut exp: u128, m: u128) -> u128 {
    base %= m;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u128(acc, base, m);
        }
        base = mul_mod_u128(base, base, m);
        exp >>= 1;
    }
    acc
}

fn is_probable_prime_u128(n: u128) -> bool {
    if n <= u64::MAX as u128 {
        return is_prime_u64(n as u64);
    }
    if n % 2 == 0 {
        return false;
    }
    let d0 = n - 1;
    let s = d0.trailing_zeros();
    let d = d0 >> s;
    // Fixed witness schedule; deterministic behaviour, negligible error.
    'witness: for w in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53] {
        let mut x = mod_pow_u128(w, d, n);
        if x == 1 || x == d0 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u128(x, x, n);
            if x == d0 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's cycle variant of Pollard's rho; n must be odd, composite, > 1.
fn brent_rho(n: u128) -> u128 {
    for c in 1u128..64 {
        let f = |x: u128| (mul_mod_u128(x, x, n) + c) % n;
        let mut x = 2u128;
        let mut y = 2u128;
        let mut d = 1u128;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            let diff = if x > y { x - y } else { y - x };
            if diff == 0 {
                break;
            }
            d = gcd_u128(diff, n);
        }
        if d != 1 && d != n {
            return d;
        }
    }
    // Unreachable for the working range in practice.
    panic!("rho failed to split composite {n}");
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Complete factorization of a nonzero integer, sign tracked via `value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub value: BigInt,
    /// (prime, exponent) pairs, primes distinct and ascending.
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Product of prime powers; equals `|value|`.
    pub fn recompose(&self) -> BigInt {
        let mut acc = BigInt::from(1);
        for &(p, e) in &self.factors {
            acc *= BigInt::from(p).pow(e);
        }
        acc
    }

    pub fn sign(&self) -> i8 {
        if self.value.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn ord(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|(q, _)| *q == p)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }
}

/// Factor `n` by trial division against the shared prime table, with a
/// primality check and a rho fallback on the cofactor.
pub fn factorize(n: &BigInt) -> Result<Factorization> {
    if n.is_zero() {
        return Err(Error::ZeroFactorization);
    }
    let mag: u128 = n
        .abs()
        .try_into()
        .map_err(|_| Error::WorkingRange(n.clone()))?;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut rem = mag;
    for p in trial_division_table().iter() {
        let p128 = p as u128;
        if p128 * p128 > rem {
            break;
        }
        if rem % p128 == 0 {
            let mut e = 0u32;
            while rem % p128 == 0 {
                rem /= p128;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rem > 1 {
        factor_cofactor(rem, &mut factors);
        factors.sort_unstable_by_key(|&(p, _)| p);
        // Merge duplicates that the rho path may produce.
        let mut merged: Vec<(u64, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => merged.push((p, e)),
            }
        }
        factors = merged;
    }
    Ok(Factorization { value: n.clone(), factors })
}

fn factor_cofactor(n: u128, out: &mut Vec<(u64, u32)>) {
    if n == 1 {
        return;
    }
    if is_probable_prime_u128(n) {
        let p = u64::try_from(n).unwrap_or_else(|_| {
            // A prime cofactor beyond 64 bits cannot arise after trial
            // division within the 128-bit working range of desk-scale
            // discriminants without a composite split first; treat as a bug.
            panic!("prime factor {n} exceeds 64 bits")
        });
        out.push((p, 1));
        return;
    }
    let d = brent_rho(n);
    factor_cofactor(d, out);
    factor_cofactor(n / d, out);
}

/// Legendre symbol (a/p) for an odd prime p.
pub fn legendre(a: &BigInt, p: u64) -> Result<i32> {
    if p == 2 || !is_prime_u64(p) {
        return Err(Error::NotOddPrime(p));
    }
    let r = a.mod_floor(&BigInt::from(p));
    let r: u64 = r.try_into().expect("mod_floor result fits u64");
    Ok(legendre_reduced(r, p))
}

/// Reciprocity descent for (a/p) with `a` already reduced mod the odd prime
/// `p`. This is the inner-loop path of the character-sum kernels.
pub(crate) fn legendre_reduced(mut a: u64, mut p: u64) -> i32 {
    debug_assert!(p % 2 == 1 && p > 1);
    let mut sign = 1i32;
    a %= p;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(p % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut p);
        if a % 4 == 3 && p % 4 == 3 {
            sign = -sign;
        }
        a %= p;
    }
    if p == 1 {
        sign
    } else {
        0
    }
}

/// Exact evaluation of an integer polynomial (ascending coefficients) at t.
pub fn poly_eval(coeffs: &[BigInt], t: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in coeffs.iter().rev() {
        acc = acc * t + c;
    }
    acc
}
