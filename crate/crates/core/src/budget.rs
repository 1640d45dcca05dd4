//! Per-step localization rates and the blurring-variance pipeline that
//! composes the total σ_Λ of the decohered pattern.
//!
//! Momentum-space blurs (σ_01, σ₂) map into position through the classical
//! momentum-to-position map of steps 3+4; σ₃ and σ₄ are already positional.
//! Each part is stored in its native unit and converted only in the
//! composition:
//!
//! σ_Λ² = [(σ₂² + σ_01²)·((ω₄τ₃+1)/(mω₄))² + σ₃² + σ₄²]·e^{2ω₄τ₄}/4 + σ₅²

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::material::Particle;
use crate::protocol::ProtocolParams;
use serde::Serialize;
use std::f64::consts::PI;

/// Localization rates Λ₁..Λ₄ (1/(m²·s)) for the four active protocol steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LocalizationRates {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

impl LocalizationRates {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda4", self.lambda4),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{n} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Photon-recoil localization rate along the standing-wave axis:
/// Λ_r(φ, ω) = π²ω²ρV²·Re[(ε_r−1)/(ε_r+2)]·(7 − 3cos 2φ)/(5ħλ³),
/// where ω is the trap frequency the particle would see at an anti-node.
pub fn recoil_rate(phi: f64, omega: f64, particle: &Particle, wavelength: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let v = particle.volume;
    PI * PI * omega * omega * particle.material.density * v * v * particle.re_pol_factor
        * (7.0 - 3.0 * (2.0 * phi).cos())
        / (5.0 * HBAR * wavelength.powi(3))
}

/// Step-4 recoil rate: the particle sits at a node, Λ₄ = Λ_r(π/2, ω₄).
pub fn step4_recoil(omega4: f64, particle: &Particle, wavelength: f64) -> f64 {
    recoil_rate(PI / 2.0, omega4, particle, wavelength)
}

/// Directional recoil coefficients of the scattering Lindblad term; their sum
/// is k² for every φ, so total recoil heating is position-independent.
pub fn beta_x(phi: f64, k: f64) -> f64 {
    k * k * (7.0 - 3.0 * (2.0 * phi).cos()) / 10.0
}

pub fn beta_y(phi: f64, k: f64) -> f64 {
    k * k * phi.cos().powi(2) / 5.0
}

pub fn beta_z(phi: f64, k: f64) -> f64 {
    2.0 * k * k * phi.cos().powi(2) / 5.0
}

/// Purity after the first free fall under displacement noise:
/// P(τ₁) = [(8/3)Λ₁τ₁σ_x²(τ₁) + (2n̄+1)²]^{−1/2}.
/// Valid for ω₀²τ₁² ≫ 1 and x_zp²Λ₁τ₁ ≪ 1.
pub fn purity_after_free_fall(nbar: f64, lambda1: f64, tau1: f64, sigma_x1: f64) -> f64 {
    let eps = 2.0 * nbar + 1.0;
    (8.0 / 3.0 * lambda1 * tau1 * sigma_x1 * sigma_x1 + eps * eps).powf(-0.5)
}

/// Per-step blurring contributions in native units, plus the composed σ_Λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlurringBudget {
    /// Momentum blur from initial mixedness + step-1 noise (kg·m/s)
    pub sigma01: f64,
    /// Momentum blur from step-2 recoil, σ₂² = 2ħ²Λ₂τ₂ (kg·m/s)
    pub sigma2: f64,
    /// Position blur from step-3 noise, σ₃² = 2ħ²Λ₃τ₃³/(3m²) (m)
    pub sigma3: f64,
    /// Position blur from step-4 noise, σ₄² = ħ²Λ₄/(m²ω₄³) (m)
    pub sigma4: f64,
    /// Detector blur (m)
    pub sigma5: f64,
    /// Composed total blur (m)
    pub sigma_lambda: f64,
}

impl BlurringBudget {
    /// Recompute σ_Λ from the stored parts (the composition rule itself).
    pub fn recompose(&self, params: &ProtocolParams, mass: f64) -> f64 {
        compose_sigma_lambda(
            self.sigma01,
            self.sigma2,
            self.sigma3,
            self.sigma4,
            self.sigma5,
            params,
            mass,
        )
    }
}

fn compose_sigma_lambda(
    sigma01: f64,
    sigma2: f64,
    sigma3: f64,
    sigma4: f64,
    sigma5: f64,
    params: &ProtocolParams,
    mass: f64,
) -> f64 {
    let map = if params.omega4 > 0.0 {
        (params.omega4 * params.tau3 + 1.0) / (mass * params.omega4)
    } else {
        params.tau3 / mass
    };
    let boost = (2.0 * params.omega4 * params.tau4).exp() / 4.0;
    let bracket = (sigma2 * sigma2 + sigma01 * sigma01) * map * map
        + sigma3 * sigma3
        + sigma4 * sigma4;
    (bracket * boost + sigma5 * sigma5).sqrt()
}

/// Build the full budget from protocol parameters, localization rates and
/// the step-1 state width.
pub fn blurring_budget(
    params: &ProtocolParams,
    particle: &Particle,
    rates: &LocalizationRates,
    sigma_x1: f64,
    nbar: f64,
) -> Result<BlurringBudget> {
    params.validate()?;
    rates.validate()?;
    let m = particle.mass;
    let purity = purity_after_free_fall(nbar, rates.lambda1, params.tau1, sigma_x1);
    // sigma_01² = (ħ²/4)(1 − P²)/(P² σ_x²(τ₁))
    let sigma01_sq =
        HBAR * HBAR / 4.0 * (1.0 - purity * purity) / (purity * purity * sigma_x1 * sigma_x1);
    let sigma2_sq = 2.0 * HBAR * HBAR * rates.lambda2 * params.tau2;
    let sigma3_sq = 2.0 * HBAR * HBAR * rates.lambda3 * params.tau3.powi(3) / (3.0 * m * m);
    let sigma4_sq = if params.omega4 > 0.0 {
        HBAR * HBAR * rates.lambda4 / (m * m * params.omega4.powi(3))
    } else {
        0.0
    };
    let (sigma01, sigma2, sigma3, sigma4) =
        (sigma01_sq.sqrt(), sigma2_sq.sqrt(), sigma3_sq.sqrt(), sigma4_sq.sqrt());
    let sigma_lambda =
        compose_sigma_lambda(sigma01, sigma2, sigma3, sigma4, params.sigma5, params, m);
    Ok(BlurringBudget { sigma01, sigma2, sigma3, sigma4, sigma5: params.sigma5, sigma_lambda })
}
