//! Closed forms for a double-Gaussian source heralded through a Gaussian filter.
//!
//! Writing the joint spectral intensity as |Φ|² ∝ exp(−(aω² + 2bωω′ + cω′²)) and the
//! filter as exp(−γ(ω′−ω₀)²) with γ = 1/(2σ_f²), every quantity reduces to Gaussian
//! integrals:
//!
//! * 𝒮 = √(β/(β+γ)) · exp(−βγω₀²/(β+γ)), with β = (ac − b²)/a the idler marginal precision;
//! * 𝒫 = √((ac − b² + γa) / (a(c + γ))), independent of ω₀;
//! * K = √(ac/(ac − b²)), the unfiltered limit γ → 0 of 1/𝒫.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::filter::{GaussianFilter, Side};
use crate::jsa::DoubleGaussianJsa;
use crate::quadrature::BeamSplitter;

/// Scalars characterizing a heralded source with one Gaussian herald filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub success: f64,
    pub purity: f64,
    pub unfiltered_purity: f64,
    pub schmidt_number: f64,
    pub g2: f64,
    /// HOM visibility on a balanced beamsplitter.
    pub visibility_5050: f64,
}

/// Heralding success probability 𝒮.
pub fn closed_form_success(jsa: &DoubleGaussianJsa, filter: &GaussianFilter) -> f64 {
    let p = jsa.intensity_precision();
    let beta = p.det() / p.a;
    let gamma = 1.0 / (2.0 * filter.width * filter.width);
    let detuning = (-beta * gamma * filter.center * filter.center / (beta + gamma)).exp();
    (beta / (beta + gamma)).sqrt() * detuning
}

/// Heralded-photon purity 𝒫.
pub fn closed_form_purity(jsa: &DoubleGaussianJsa, filter: &GaussianFilter) -> f64 {
    let p = jsa.intensity_precision();
    let gamma = 1.0 / (2.0 * filter.width * filter.width);
    ((p.det() + gamma * p.a) / (p.a * (p.c + gamma)))
        .sqrt()
        .min(1.0)
}

/// Schmidt number K ≥ 1.
pub fn schmidt_number(jsa: &DoubleGaussianJsa) -> f64 {
    let p = jsa.intensity_precision();
    (p.a * p.c / p.det()).sqrt().max(1.0)
}

/// Unfiltered g⁽²⁾ = 1 + 1/K of either arm at low pair rates.
pub fn g2(schmidt_number: f64) -> f64 {
    1.0 + 1.0 / schmidt_number
}

/// HOM visibility V = RT𝒫/(1 − (2+𝒫)RT).
pub fn visibility(purity: f64, beamsplitter: BeamSplitter) -> f64 {
    let rt = beamsplitter.rt();
    if rt == 0.0 {
        return 0.0;
    }
    rt * purity / (1.0 - (2.0 + purity) * rt)
}

/// Purity that gives visibility `v` on a balanced beamsplitter (inverse of 𝒫/(2−𝒫)).
pub fn purity_for_visibility(v: f64) -> f64 {
    2.0 * v / (1.0 + v)
}

/// Coincidence probability for identical Gaussian herald filters on both sources:
/// 1 − 2RT(1 + 𝒫 exp[−Δτ² σ₁²σ₂² / (2(σ₁² sin²θ₂ + σ₂² sin²θ₁))]).
pub fn hom_dip_analytic(
    jsa: &DoubleGaussianJsa,
    purity: f64,
    beamsplitter: BeamSplitter,
    delay: f64,
) -> f64 {
    let (s1, s2) = (jsa.sigma1 * jsa.sigma1, jsa.sigma2 * jsa.sigma2);
    let e = s1 * jsa.theta2.sin().powi(2) + s2 * jsa.theta1.sin().powi(2);
    let shape = (-delay * delay * s1 * s2 / (2.0 * e)).exp();
    1.0 - 2.0 * beamsplitter.rt() * (1.0 + purity * shape)
}

/// Everything the closed forms give for one source and (optionally) one filter.
pub fn closed_form_report(
    jsa: &DoubleGaussianJsa,
    filter: Option<&GaussianFilter>,
) -> ClosedFormReport {
    let k = schmidt_number(jsa);
    let (success, purity) = match filter {
        Some(f) => (closed_form_success(jsa, f), closed_form_purity(jsa, f)),
        None => (1.0, 1.0 / k),
    };
    ClosedFormReport {
        success,
        purity,
        unfiltered_purity: 1.0 / k,
        schmidt_number: k,
        g2: g2(k),
        visibility_5050: visibility(purity, BeamSplitter::balanced()),
    }
}

/// Thermal Schmidt coefficients p_μ = 2(K−1)^μ/(K+1)^{μ+1} for μ = 0..n.
pub fn thermal_schmidt_coefficients(schmidt_number: f64, n_modes: usize) -> Result<Vec<f64>> {
    if !(schmidt_number >= 1.0 && schmidt_number.is_finite()) {
        return Err(invalid(format!(
            "Schmidt number must be >= 1, got {schmidt_number}"
        )));
    }
    let k = schmidt_number;
    let ratio = (k - 1.0) / (k + 1.0);
    let mut p = 2.0 / (k + 1.0);
    Ok((0..n_modes)
        .map(|_| {
            let v = p;
            p *= ratio;
            v
        })
        .collect())
}

/// Mode scales (Ω₁, Ω₂) of the signal and idler Hermite–Gaussian Schmidt functions.
pub fn schmidt_scales(jsa: &DoubleGaussianJsa) -> (f64, f64) {
    let (s1, s2) = (jsa.sigma1 * jsa.sigma1, jsa.sigma2 * jsa.sigma2);
    let (sn1, cs1) = jsa.theta1.sin_cos();
    let (sn2, cs2) = jsa.theta2.sin_cos();
    let base = (jsa.sigma1 * jsa.sigma2 / (jsa.theta1 - jsa.theta2).sin().abs()).sqrt();
    let cos_term = s1 * cs2 * cs2 + s2 * cs1 * cs1;
    let sin_term = s1 * sn2 * sn2 + s2 * sn1 * sn1;
    let aspect = (cos_term / sin_term).powf(0.25);
    (base * aspect, base / aspect)
}

/// Normalized Hermite function ψ_n(x) = (2ⁿ n! √π)^{−1/2} e^{−x²/2} Hₙ(x).
///
/// Uses the orthonormal three-term recurrence with a running log scale, so neither
/// the factorial nor e^{−x²/2} is formed on its own.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let m = cur.abs();
        if m > 1e150 || (m < 1e-150 && m > 0.0) {
            log_scale += m.ln();
            prev /= m;
            cur /= m;
        }
    }
    if cur == 0.0 {
        return 0.0;
    }
    cur.signum() * (cur.abs().ln() + log_scale).exp()
}

/// Analytic Schmidt function Γ_μ (signal) or Θ_μ (idler):
/// (−i)^μ (2^μ μ! Ω √π)^{−1/2} exp(−ω²/2Ω²) H_μ(ω/Ω).
pub fn schmidt_mode_analytic(
    jsa: &DoubleGaussianJsa,
    mu: usize,
    side: Side,
    omega: f64,
) -> Complex64 {
    let (o1, o2) = schmidt_scales(jsa);
    let scale = match side {
        Side::Signal => o1,
        Side::Idler => o2,
    };
    let value = hermite_function(mu, omega / scale) / scale.sqrt();
    let phase = match mu % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    phase * value
}
