//! Window bounds for the average number of normalized low zeros: the
//! lower bound through the `phi` construction, the upper bound through the
//! Fejer function, the random-matrix prediction, and the sandwich report.

use crate::testfunc::{c_of_h, ratio_phihat0_phi0, FejerPsi, TestFunctionH};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// The sandwich: lower bound at `tau_BSD`, prediction and upper bound at
/// the window `tau` (default `1/(2 sigma)`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    pub r: u32,
    pub sigma: f64,
    pub tau: f64,
    pub model_a: f64,
    pub model_b: f64,
    pub lower: f64,
    pub upper: f64,
    pub rmt: f64,
    pub tau_bsd: f64,
    pub sandwich_ok: bool,
}

/// `a + b phihat(0)/phi(0)` for the window [-tau, tau]; the finite-R error
/// term is reported by the density engine, never folded in here.
pub fn lower_bound(
    model_a: f64,
    model_b: f64,
    h: &TestFunctionH,
    sigma: f64,
    tau: f64,
) -> Result<f64> {
    Ok(model_a + model_b * ratio_phihat0_phi0(h, sigma, tau)?)
}

/// Smallest certified window: `tau_BSD = 1 / (pi C(h) sigma)`.
pub fn tau_bsd(h: &TestFunctionH, sigma: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::InvalidConfig("sigma must be positive".into()));
    }
    Ok(1.0 / (std::f64::consts::PI * c_of_h(h)? * sigma))
}

/// `a + (a(psi(0) - psi(tau)) + b psihat(0)) / psi(tau)`, valid for
/// `0 < tau < 1/sigma` where the Fejer profile is positive and decreasing.
pub fn upper_bound(model_a: f64, model_b: f64, psi: &FejerPsi, tau: f64) -> Result<f64> {
    let limit = 1.0 / psi.sigma();
    if tau <= 0.0 || tau >= limit {
        return Err(Error::TauOutOfRange { tau, limit });
    }
    let p0 = psi.psi_at(0.0);
    let pt = psi.psi_at(tau);
    Ok(model_a + (model_a * (p0 - pt) + model_b * psi.psihat_at(0.0)) / pt)
}

/// Random-matrix prediction for the window [-tau, tau]: `r + 1/2 + 2 tau`.
pub fn rmt_window(r: u32, tau: f64) -> f64 {
    r as f64 + 0.5 + 2.0 * tau
}

/// Assemble the sandwich: lower bound at `tau_BSD(h, sigma)`, prediction
/// and upper bound at `tau = 1/(2 sigma)`.
pub fn sandwich(r: u32, sigma: f64, h: &TestFunctionH, psi: &FejerPsi) -> Result<BoundsReport> {
    let model_a = r as f64 + 0.5;
    let model_b = 1.0;
    let tb = tau_bsd(h, sigma)?;
    let tau = 1.0 / (2.0 * sigma);
    let lower = lower_bound(model_a, model_b, h, sigma, tb)?;
    let upper = upper_bound(model_a, model_b, psi, tau)?;
    let rmt = rmt_window(r, tau);
    Ok(BoundsReport {
        r,
        sigma,
        tau,
        model_a,
        model_b,
        lower,
        upper,
        rmt,
        tau_bsd: tb,
        sandwich_ok: lower <= rmt && rmt <= upper,
    })
}
