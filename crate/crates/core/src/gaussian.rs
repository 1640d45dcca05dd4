//! Gaussian motional states and their evolution during the free-fall stages.
//!
//! A Gaussian state with vanishing first moments is fixed by three numbers:
//! the position and momentum variances and the purity; the sign of
//! ⟨xp + px⟩ is carried separately. The Wigner-exponent coefficients a₁, a₂,
//! a₃ (W ∝ exp(−a₁x² − a₂p² − a₃px)) are derived accessors. Note that a₃ is
//! opposite in sign to ⟨xp + px⟩: a freely expanding state has positive
//! position-momentum covariance and negative a₃.

use crate::constants::HBAR;
use crate::error::{Error, Result};
use serde::Serialize;

/// Zero-point position spread x_zp = √(ħ/(2mω₀)) of a harmonic trap (m).
pub fn zero_point_motion(mass: f64, omega0: f64) -> Result<f64> {
    if !(mass > 0.0) || !(omega0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "zero_point_motion needs mass > 0 and omega0 > 0, got m={mass}, omega0={omega0}"
        )));
    }
    Ok((HBAR / (2.0 * mass * omega0)).sqrt())
}

/// Zero-point momentum spread p_zp = √(ħmω₀/2) (kg·m/s).
pub fn zero_point_momentum(mass: f64, omega0: f64) -> Result<f64> {
    if !(mass > 0.0) || !(omega0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "zero_point_momentum needs mass > 0 and omega0 > 0, got m={mass}, omega0={omega0}"
        )));
    }
    Ok((HBAR * mass * omega0 / 2.0).sqrt())
}

/// Snapshot of a zero-mean Gaussian motional state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianState {
    /// Position variance σ_x² (m²)
    pub var_x: f64,
    /// Momentum variance σ_p² ((kg·m/s)²)
    pub var_p: f64,
    /// Purity P = Tr ρ² ∈ (0, 1]
    pub purity: f64,
    /// Sign of ⟨xp + px⟩: −1, 0 or +1
    pub cross_sign: i8,
}

impl GaussianState {
    pub fn new(var_x: f64, var_p: f64, purity: f64, cross_sign: i8) -> Result<Self> {
        if !(var_x > 0.0) || !(var_p > 0.0) {
            return Err(Error::InvalidInput(format!(
                "variances must be > 0, got var_x={var_x}, var_p={var_p}"
            )));
        }
        if !(purity > 0.0) || purity > 1.0 {
            return Err(Error::InvalidInput(format!("purity must be in (0,1], got {purity}")));
        }
        // generalized uncertainty: 4 σ_x² σ_p² ≥ ħ²/P² (up to rounding)
        let bound = HBAR * HBAR / (purity * purity);
        if 4.0 * var_x * var_p < bound * (1.0 - 1e-9) {
            return Err(Error::InvalidInput(format!(
                "state violates 4 var_x var_p >= hbar^2/P^2: {} < {}",
                4.0 * var_x * var_p,
                bound
            )));
        }
        Ok(GaussianState { var_x, var_p, purity, cross_sign })
    }

    /// Thermal state of a trap at frequency ω₀ with mean occupation n̄.
    pub fn thermal(mass: f64, omega0: f64, nbar: f64) -> Result<Self> {
        if nbar < 0.0 {
            return Err(Error::InvalidInput(format!("nbar must be >= 0, got {nbar}")));
        }
        let xzp = zero_point_motion(mass, omega0)?;
        let pzp = zero_point_momentum(mass, omega0)?;
        let eps = 2.0 * nbar + 1.0;
        Ok(GaussianState {
            var_x: xzp * xzp * eps,
            var_p: pzp * pzp * eps,
            purity: 1.0 / eps,
            cross_sign: 0,
        })
    }

    /// |⟨xp + px⟩|/2, from the purity relation det Σ = ħ²/(4P²).
    pub fn cov_xp(&self) -> f64 {
        let det = HBAR * HBAR / (4.0 * self.purity * self.purity);
        let s = (self.var_x * self.var_p - det).max(0.0).sqrt();
        f64::from(self.cross_sign) * s
    }

    /// Wigner-exponent coefficient of x²: a₁ = σ_p²/(2 det Σ) = 2P²σ_p²/ħ².
    pub fn a1(&self) -> f64 {
        2.0 * self.purity * self.purity * self.var_p / (HBAR * HBAR)
    }

    /// Wigner-exponent coefficient of p²: a₂ = 2P²σ_x²/ħ².
    pub fn a2(&self) -> f64 {
        2.0 * self.purity * self.purity * self.var_x / (HBAR * HBAR)
    }

    /// Wigner-exponent coefficient of px: a₃ = −σ_xp/det Σ = −4P²σ_xp/ħ².
    pub fn a3(&self) -> f64 {
        -4.0 * self.purity * self.purity * self.cov_xp() / (HBAR * HBAR)
    }

    /// Evolve through a free fall of duration `tau` with displacement-noise
    /// localization rate `lambda` (exact second-moment flow).
    pub fn free_fall(&self, mass: f64, tau: f64, lambda: f64) -> Result<Self> {
        if tau < 0.0 || lambda < 0.0 {
            return Err(Error::InvalidInput(format!(
                "free_fall needs tau >= 0 and lambda >= 0, got tau={tau}, lambda={lambda}"
            )));
        }
        let l = HBAR * HBAR * lambda;
        let cov0 = self.cov_xp();
        let var_x = self.var_x
            + 2.0 * cov0 * tau / mass
            + self.var_p * tau * tau / (mass * mass)
            + 2.0 * l * tau.powi(3) / (3.0 * mass * mass);
        let cov = cov0 + self.var_p * tau / mass + l * tau * tau / mass;
        let var_p = self.var_p + 2.0 * l * tau;
        let det = var_x * var_p - cov * cov;
        let purity = HBAR / (2.0 * det.sqrt());
        GaussianState::new(var_x, var_p, purity.min(1.0), sign_of(cov))
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const M: f64 = 9.6866e-19; // 50 nm silica sphere, kg
    const W0: f64 = 2.0 * PI * 100e3;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zero_point_case_study() {
        let xzp = zero_point_motion(M, W0).unwrap();
        assert!(rel(xzp, 9.308e-12) < 1e-3, "x_zp = {xzp}");
        // scaling: x_zp ∝ m^{-1/2}, and quadrupling ω₀ halves it
        let x2 = zero_point_motion(2.0 * M, W0).unwrap();
        assert!(rel(x2 * x2 * 2.0, xzp * xzp) < 1e-12);
        let x4 = zero_point_motion(M, 4.0 * W0).unwrap();
        assert!(rel(x4 * 2.0, xzp) < 1e-12);
        assert!(zero_point_motion(0.0, W0).is_err());
        assert!(zero_point_motion(M, -1.0).is_err());
    }

    #[test]
    fn thermal_ground_state() {
        let s = GaussianState::thermal(M, W0, 0.0).unwrap();
        let xzp = zero_point_motion(M, W0).unwrap();
        assert_eq!(s.purity, 1.0);
        assert!(rel(s.var_x, xzp * xzp) < 1e-14);
        assert_eq!(s.cross_sign, 0);
    }

    #[test]
    fn thermal_half_phonon() {
        let s = GaussianState::thermal(M, W0, 0.5).unwrap();
        let xzp = zero_point_motion(M, W0).unwrap();
        assert_eq!(s.purity, 0.5);
        assert!(rel(s.var_x, 2.0 * xzp * xzp) < 1e-14);
    }

    #[test]
    fn thermal_saturates_uncertainty() {
        // 4 σ_x² σ_p² P² = ħ² exactly for any thermal state
        for nbar in [0.0, 0.3, 0.5, 2.0, 17.5] {
            let s = GaussianState::thermal(M, W0, nbar).unwrap();
            let lhs = 4.0 * s.var_x * s.var_p * s.purity * s.purity;
            assert!(rel(lhs, HBAR * HBAR) < 1e-12, "nbar={nbar}");
        }
    }

    #[test]
    fn negative_nbar_rejected() {
        assert!(GaussianState::thermal(M, W0, -0.1).is_err());
    }

    #[test]
    fn expanding_state_has_negative_a3() {
        let s = GaussianState::thermal(M, W0, 0.5).unwrap();
        let e = s.free_fall(M, 1e-3, 0.0).unwrap();
        assert_eq!(e.cross_sign, 1);
        assert!(e.a3() < 0.0);
        // purity preserved without noise
        assert!(rel(e.purity, 0.5) < 1e-9);
        // a₁ − a₃²/(4a₂) = 1/(2σ_x²) for every Gaussian state
        let lhs = e.a1() - e.a3() * e.a3() / (4.0 * e.a2());
        assert!(rel(lhs, 1.0 / (2.0 * e.var_x)) < 1e-9);
    }

    #[test]
    fn free_fall_variance_growth() {
        let s = GaussianState::thermal(M, W0, 0.0).unwrap();
        let tau = 1.34e-3;
        let e = s.free_fall(M, tau, 0.0).unwrap();
        // ballistic: σ_x²(τ) = x_zp²(1 + ω₀²τ²)
        let expect = s.var_x * (1.0 + (W0 * tau).powi(2));
        assert!(rel(e.var_x, expect) < 1e-12);
        // momentum variance unchanged
        assert!(rel(e.var_p, s.var_p) < 1e-15);
    }
}
