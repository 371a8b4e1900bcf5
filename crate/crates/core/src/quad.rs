//! Adaptive Gauss-Legendre quadrature for smooth compactly supported
//! integrands, plus small summation utilities shared across the crate.

use crate::{Error, Result};
use std::sync::OnceLock;

/// Default absolute tolerance used by the analytic modules.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Hard cap on integrand evaluations per adaptive call.
pub const MAX_EVALS: usize = 1_000_000;

const PANEL_ORDER: usize = 15;

fn gl_nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| legendre_rule(PANEL_ORDER))
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre polynomial.
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// One fixed Gauss-Legendre panel over [a, b].
pub fn panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl_nodes();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive Gauss-Legendre integration of `f` over [a, b] by interval
/// bisection to absolute tolerance `tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let total_len = (b - a).abs();
    let mut evals = 0usize;
    let mut stack = vec![(a, b, panel(&mut f, a, b))];
    evals += PANEL_ORDER;
    let mut acc = 0.0;
    while let Some((lo, hi, whole)) = stack.pop() {
        if evals > MAX_EVALS {
            return Err(Error::QuadratureBudget);
        }
        let mid = 0.5 * (lo + hi);
        let left = panel(&mut f, lo, mid);
        let right = panel(&mut f, mid, hi);
        evals += 2 * PANEL_ORDER;
        let refined = left + right;
        let local_tol = tol * ((hi - lo).abs() / total_len).max(1e-3);
        if (refined - whole).abs() <= local_tol || (hi - lo).abs() < 1e-14 {
            acc += refined;
        } else {
            stack.push((lo, mid, left));
            stack.push((mid, hi, right));
        }
    }
    Ok(acc)
}

/// Integrate over [a, b] after splitting at the given interior breakpoints
/// (kinks of piecewise-smooth integrands, e.g. the edges of indicators).
pub fn adaptive_split<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut acc = 0.0;
    let mut lo = a;
    for c in cuts.into_iter().chain(std::iter::once(b)) {
        acc += adaptive(&mut f, lo, c, tol)?;
        lo = c;
    }
    Ok(acc)
}

/// Pairwise (cascade) summation in the given index order; deterministic for
/// a fixed input ordering regardless of how the inputs were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_panel_is_exact() {
        // 15-point rule integrates degree <= 29 exactly.
        let mut f = |x: f64| x.powi(8) - 3.0 * x.powi(2) + 1.0;
        let got = panel(&mut f, 0.0, 1.0);
        let want = 1.0 / 9.0 - 1.0 + 1.0;
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let got = adaptive(|x: f64| (40.0 * x).cos(), 0.0, 1.0, 1e-12).unwrap();
        let want = (40.0f64).sin() / 40.0;
        assert!((got - want).abs() < 1e-11, "got {got} want {want}");
    }

    #[test]
    fn adaptive_split_handles_kinks() {
        let got = adaptive_split(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-12).unwrap();
        assert!((got - 2.5).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        // Deterministic noise is nowhere resolvable, so the bisection can
        // only give up via the evaluation cap.
        let noise = |x: f64| {
            let mut z = x.to_bits().wrapping_mul(0x9e37_79b9_7f4a_7c15);
            z ^= z >> 31;
            (z % 1000) as f64 / 1000.0
        };
        match adaptive(noise, 0.0, 1.0, 1e-15) {
            Err(Error::QuadratureBudget) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
