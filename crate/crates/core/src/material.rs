//! Dielectric material model and the spherical particle built from it.

use crate::constants::AMU;
use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Bulk optical/thermal properties of the particle material, evaluated at a
/// single laser wavelength (no dispersion model).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Material {
    /// Mass density ρ (kg/m³)
    pub density: f64,
    /// Specific heat capacity c_m (J/(kg·K))
    pub specific_heat: f64,
    /// Real part of the refractive index at `wavelength`
    pub refractive_index_re: f64,
    /// Imaginary part of the refractive index at `wavelength`
    pub refractive_index_im: f64,
    /// Laser wavelength λ the index refers to (m)
    pub wavelength: f64,
}

impl Material {
    /// Fused silica at λ = 1550 nm.
    pub fn silica() -> Self {
        Material {
            density: 1850.0,
            specific_heat: 700.0,
            refractive_index_re: 1.43,
            refractive_index_im: 2.46e-9,
            wavelength: 1550e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0) {
            return Err(Error::InvalidInput(format!(
                "material density must be > 0, got {}",
                self.density
            )));
        }
        if !(self.specific_heat > 0.0) {
            return Err(Error::InvalidInput(format!(
                "material specific heat must be > 0, got {}",
                self.specific_heat
            )));
        }
        if self.refractive_index_im < 0.0 {
            return Err(Error::InvalidInput(format!(
                "Im(n) must be >= 0, got {}",
                self.refractive_index_im
            )));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidInput(format!(
                "wavelength must be > 0, got {}",
                self.wavelength
            )));
        }
        Ok(())
    }

    /// Relative permittivity ε_r = n² at the laser wavelength, as (re, im).
    pub fn epsilon_r(&self) -> (f64, f64) {
        let (nr, ni) = (self.refractive_index_re, self.refractive_index_im);
        (nr * nr - ni * ni, 2.0 * nr * ni)
    }

    /// Clausius–Mossotti factor (ε_r − 1)/(ε_r + 2) as (re, im).
    pub fn polarizability_factor(&self) -> (f64, f64) {
        let (er, ei) = self.epsilon_r();
        let (ar, ai) = (er - 1.0, ei);
        let (br, bi) = (er + 2.0, ei);
        let den = br * br + bi * bi;
        ((ar * br + ai * bi) / den, (ai * br - ar * bi) / den)
    }

    /// Parse from flat `key = value` text (SI units). Unrecognized keys are
    /// rejected so unit mistakes do not pass silently. Missing keys fall back
    /// to silica defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut mat = Material::silica();
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected `key = value`", lineno + 1));
                continue;
            };
            let key = key.trim();
            let parsed: std::result::Result<f64, _> = value.trim().parse();
            let Ok(v) = parsed else {
                problems.push(format!("line {}: `{}` is not a number", lineno + 1, value.trim()));
                continue;
            };
            match key {
                "density_kg_m3" => mat.density = v,
                "specific_heat_j_kg_k" => mat.specific_heat = v,
                "refractive_index_re" => mat.refractive_index_re = v,
                "refractive_index_im" => mat.refractive_index_im = v,
                "wavelength_m" => mat.wavelength = v,
                other => problems.push(format!("line {}: unknown key `{other}`", lineno + 1)),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        mat.validate()?;
        Ok(mat)
    }
}

/// A homogeneous dielectric sphere with derived mechanical and optical
/// response quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Particle {
    /// Radius r (m)
    pub radius: f64,
    pub material: Material,
    /// Mass ρ·(4/3)πr³ (kg)
    pub mass: f64,
    /// Volume (4/3)πr³ (m³)
    pub volume: f64,
    /// Re[(ε_r−1)/(ε_r+2)], sets trap stiffness and recoil rates
    pub re_pol_factor: f64,
    /// β = Im/Re of (ε_r−1)/(ε_r+2), sets the absorbed laser power
    pub beta_abs: f64,
}

impl Particle {
    pub fn from_radius(radius: f64, material: Material) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "particle radius must be > 0, got {radius}"
            )));
        }
        material.validate()?;
        let volume = 4.0 / 3.0 * PI * radius.powi(3);
        let mass = material.density * volume;
        let (re, im) = material.polarizability_factor();
        if !(re > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Re[(eps-1)/(eps+2)] must be > 0 for a trappable particle, got {re}"
            )));
        }
        Ok(Particle {
            radius,
            mass,
            volume,
            re_pol_factor: re,
            beta_abs: im / re,
            material,
        })
    }

    /// Mass in atomic mass units.
    pub fn mass_amu(&self) -> f64 {
        self.mass / AMU
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn case_study_mass_and_volume() {
        let p = Particle::from_radius(50e-9, Material::silica()).unwrap();
        // direct arithmetic: 1850 * (4/3)π (50 nm)³
        assert!(rel(p.mass, 9.6866e-19) < 1e-3, "mass = {}", p.mass);
        assert!(rel(p.volume, 5.2360e-22) < 1e-4, "volume = {}", p.volume);
        // ~6e8 amu
        assert!(p.mass_amu() > 5.5e8 && p.mass_amu() < 6.2e8);
        // invariant: mass = density * volume exactly
        assert_eq!(p.mass, p.material.density * p.volume);
    }

    #[test]
    fn zero_radius_rejected() {
        assert!(Particle::from_radius(0.0, Material::silica()).is_err());
        assert!(Particle::from_radius(-1e-9, Material::silica()).is_err());
    }

    #[test]
    fn mass_monotone_pol_factor_constant() {
        let radii = [20e-9, 50e-9, 80e-9, 150e-9];
        let parts: Vec<Particle> = radii
            .iter()
            .map(|&r| Particle::from_radius(r, Material::silica()).unwrap())
            .collect();
        for w in parts.windows(2) {
            assert!(w[1].mass > w[0].mass);
            assert_eq!(w[0].re_pol_factor, w[1].re_pol_factor);
            assert_eq!(w[0].beta_abs, w[1].beta_abs);
        }
    }

    #[test]
    fn silica_pol_factor() {
        let p = Particle::from_radius(50e-9, Material::silica()).unwrap();
        // eps_r = 1.43² ≈ 2.0449 → (eps−1)/(eps+2) ≈ 0.2583
        assert!(rel(p.re_pol_factor, 0.25833) < 1e-3);
        assert!(p.re_pol_factor > 0.0 && p.re_pol_factor <= 1.0);
        // lossy part is tiny but positive
        assert!(p.beta_abs > 0.0 && p.beta_abs < 1e-7);
        assert!(rel(p.beta_abs, 4.99e-9) < 0.02, "beta = {}", p.beta_abs);
    }

    #[test]
    fn material_config_roundtrip() {
        let text = "
            # a denser glass
            density_kg_m3 = 2200
            refractive_index_re = 1.45
        ";
        let m = Material::from_config_str(text).unwrap();
        assert_eq!(m.density, 2200.0);
        assert_eq!(m.refractive_index_re, 1.45);
        // untouched keys keep silica defaults
        assert_eq!(m.specific_heat, 700.0);

        let bad = Material::from_config_str("density_kg_m3 = -5\nnonsense_key = 1");
        match bad {
            Err(Error::Config(list)) => assert_eq!(list.len(), 1),
            Err(Error::InvalidInput(_)) => {}
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
