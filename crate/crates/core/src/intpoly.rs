//! Exact arithmetic on integer polynomials (ascending coefficients).
//!
//! Only what the square-free decomposition of the family discriminant
//! needs: derivative, gcd with the derivative, and the radical (product of
//! distinct irreducible factors, content dropped, positive leading
//! coefficient).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) fn normalize(mut coeffs: Vec<BigInt>) -> Vec<BigInt> {
    while coeffs.last().is_some_and(|c| c.is_zero()) {
        coeffs.pop();
    }
    coeffs
}

pub(crate) fn degree(coeffs: &[BigInt]) -> Option<usize> {
    coeffs.iter().rposition(|c| !c.is_zero())
}

pub(crate) fn derivative(coeffs: &[BigInt]) -> Vec<BigInt> {
    normalize(
        coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * BigInt::from(k))
            .collect(),
    )
}

fn to_rational(coeffs: &[BigInt]) -> Vec<BigRational> {
    coeffs
        .iter()
        .map(|c| BigRational::from_integer(c.clone()))
        .collect()
}

fn rat_normalize(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

/// Remainder of a by b over the rationals (b nonzero).
fn rat_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() >= b.len() {
        let dr = r.len() - 1;
        let q = &r[dr] / &lead;
        for i in 0..=db {
            let t = &q * &b[i];
            r[dr - db + i] -= t;
        }
        r = rat_normalize(r);
        if r.is_empty() {
            break;
        }
        if r.len() - 1 < db {
            break;
        }
        if r.len() == a.len() {
            // no progress can only happen on malformed input
            break;
        }
    }
    r
}

/// Primitive integer form of a rational polynomial, positive leading
/// coefficient.
fn primitive_from_rational(v: &[BigRational]) -> Vec<BigInt> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut denom_lcm = BigInt::one();
    for c in v {
        denom_lcm = denom_lcm.lcm(c.denom());
    }
    let ints: Vec<BigInt> = v
        .iter()
        .map(|c| c.numer() * (&denom_lcm / c.denom()))
        .collect();
    primitive_part(&ints)
}

/// Divide out the content and fix the sign of the leading coefficient.
pub(crate) fn primitive_part(coeffs: &[BigInt]) -> Vec<BigInt> {
    let coeffs = normalize(coeffs.to_vec());
    if coeffs.is_empty() {
        return coeffs;
    }
    let mut content = BigInt::zero();
    for c in &coeffs {
        content = content.gcd(c);
    }
    if coeffs.last().unwrap().is_negative() {
        content = -content;
    }
    coeffs.iter().map(|c| c / &content).collect()
}

/// Gcd over Q[T] returned as a primitive integer polynomial with positive
/// leading coefficient. Desk-scale degrees keep the rational Euclid cheap.
pub(crate) fn gcd(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut x = rat_normalize(to_rational(a));
    let mut y = rat_normalize(to_rational(b));
    if x.is_empty() {
        return primitive_part(b);
    }
    if y.is_empty() {
        return primitive_part(a);
    }
    while !y.is_empty() {
        let r = rat_rem(&x, &y);
        x = y;
        y = r;
    }
    primitive_from_rational(&x)
}

/// Exact quotient a / b over Q[T] (b must divide a), primitive integer form.
fn div_exact_primitive(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let a = rat_normalize(to_rational(a));
    let b = rat_normalize(to_rational(b));
    assert!(!b.is_empty(), "division by zero polynomial");
    let db = b.len() - 1;
    let lead = b[db].clone();
    let mut r = a;
    let mut q = vec![BigRational::zero(); r.len().saturating_sub(db)];
    while r.len() > db || (r.len() == b.len() && !r.is_empty()) {
        if r.len() < b.len() {
            break;
        }
        let dr = r.len() - 1;
        let c = &r[dr] / &lead;
        q[dr - db] = c.clone();
        for i in 0..=db {
            let t = &c * &b[i];
            r[dr - db + i] -= t;
        }
        r = rat_normalize(r);
        if r.is_empty() {
            break;
        }
    }
    assert!(r.is_empty(), "inexact polynomial division");
    primitive_from_rational(&q)
}

/// Product of the distinct irreducible polynomial factors of `p`: the
/// radical `p / gcd(p, p')`, content dropped, leading coefficient positive.
/// A nonzero constant polynomial has no irreducible factors and yields 1.
pub(crate) fn radical(p: &[BigInt]) -> Vec<BigInt> {
    let p = normalize(p.to_vec());
    match degree(&p) {
        None => Vec::new(), // zero polynomial; callers reject earlier
        Some(0) => vec![BigInt::one()],
        Some(_) => {
            let g = gcd(&p, &derivative(&p));
            div_exact_primitive(&primitive_part(&p), &g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn derivative_basic() {
        // 3 + 2t + 5t^3 -> 2 + 15t^2
        assert_eq!(derivative(&ints(&[3, 2, 0, 5])), ints(&[2, 0, 15]));
        assert!(derivative(&ints(&[7])).is_empty());
    }

    #[test]
    fn gcd_of_shared_factor() {
        // (t-1)(t+2) = t^2 + t - 2 and (t-1)(t-3) = t^2 - 4t + 3
        let g = gcd(&ints(&[-2, 1, 1]), &ints(&[3, -4, 1]));
        assert_eq!(g, ints(&[-1, 1]));
    }

    #[test]
    fn radical_drops_multiplicity_and_content() {
        // -432 t^2 -> t
        assert_eq!(radical(&ints(&[0, 0, -432])), ints(&[0, 1]));
        // 12 (t-1)^2 (t+5) = 12 t^3 + 36 t^2 - 108 t + 60
        let p = ints(&[60, -108, 36, 12]);
        assert_eq!(radical(&p), ints(&[-5, 4, 1])); // (t-1)(t+5)
        // constants have no polynomial factors
        assert_eq!(radical(&ints(&[-16])), ints(&[1]));
    }

    #[test]
    fn radical_of_squarefree_is_primitive_self() {
        let p = ints(&[-64, 0, -432]); // -16(4 + 27t^2), squarefree
        assert_eq!(radical(&p), ints(&[4, 0, 27]));
    }
}
