//! Flat key/value scenario configuration. Every key carries its unit in the
//! name (…_nm, …_khz, …_mbar, …_ms), conversion to SI happens exactly once,
//! and unknown keys are rejected so unit mistakes cannot pass silently.

use crate::environment::mbar_to_pa;
use crate::error::{Error, Result};
use crate::material::Material;
use crate::protocol::ProtocolParams;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

/// One scenario: particle, protocol, environment, run options and sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    // particle / material
    pub radius_nm: f64,
    pub density_kg_m3: f64,
    pub specific_heat_j_kg_k: f64,
    pub refractive_index_re: f64,
    pub refractive_index_im: f64,
    pub wavelength_nm: f64,
    // protocol (frequencies are ordinary frequencies in kHz; ω = 2π·ν)
    pub omega0_khz: f64,
    pub nbar: f64,
    pub tau0_ms: f64,
    pub tau1_ms: f64,
    pub tau2_us: f64,
    pub tau3_ms: f64,
    pub tau4_ms: f64,
    /// Pulse stiffness reading ω₂ (exclusive with `omega_p_khz`)
    pub omega2_khz: Option<f64>,
    /// Pulse intensity reading ω_p
    pub omega_p_khz: Option<f64>,
    pub phi2_pi: f64,
    pub omega4_khz: f64,
    pub sigma5_nm: f64,
    // environment
    pub temperature_k: f64,
    pub pressure_mbar: f64,
    pub gas_mass_amu: f64,
    pub bb_table: Option<PathBuf>,
    // run options
    pub m_sigma: f64,
    pub q_target: f64,
    pub fringe_target_nm: f64,
    /// Free-fall budget τ₁ + τ₃ for the optimizer
    pub tau_f_ms: f64,
    pub quantile: f64,
    pub n_thermal_runs: usize,
    pub g1_min: f64,
    pub contour_points: usize,
    pub oracle_seed: u64,
    /// Optional user grid size for one explicit oracle comparison
    pub oracle_grid_n: Option<usize>,
    // sweeps: None means "not swept" (use the scalar value); an explicitly
    // empty list is a vacuous sweep producing an empty table
    pub sweep_radius_nm: Option<Vec<f64>>,
    pub sweep_te_k: Option<Vec<f64>>,
    pub sweep_tauf_ms: Option<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            radius_nm: 50.0,
            density_kg_m3: 1850.0,
            specific_heat_j_kg_k: 700.0,
            refractive_index_re: 1.43,
            refractive_index_im: 2.46e-9,
            wavelength_nm: 1550.0,
            omega0_khz: 100.0,
            nbar: 0.5,
            tau0_ms: 2.0,
            tau1_ms: 1.34,
            tau2_us: 10.0,
            tau3_ms: 0.66,
            tau4_ms: 0.087,
            omega2_khz: Some(2.5),
            omega_p_khz: None,
            phi2_pi: 0.05,
            omega4_khz: 10.0,
            sigma5_nm: 0.0,
            temperature_k: 300.0,
            pressure_mbar: 1e-10,
            gas_mass_amu: 2.0,
            bb_table: None,
            m_sigma: 5.0,
            q_target: 0.005,
            fringe_target_nm: 5.0,
            tau_f_ms: 2.0,
            quantile: 0.9,
            n_thermal_runs: 400,
            g1_min: 0.95,
            contour_points: 32,
            oracle_seed: 7,
            oracle_grid_n: None,
            sweep_radius_nm: None,
            sweep_te_k: None,
            sweep_tauf_ms: None,
        }
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

impl ScenarioConfig {
    /// Parse flat `key = value` text. All schema violations are collected
    /// and reported together.
    pub fn from_str_exhaustive(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut problems: Vec<String> = Vec::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
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
            let value = value.trim();
            if let Some(first) = seen.insert(key.to_string(), lineno + 1) {
                problems.push(format!(
                    "line {}: key `{key}` already set on line {first}",
                    lineno + 1
                ));
                continue;
            }
            let mut num = |target: &mut f64| match value.parse::<f64>() {
                Ok(v) => *target = v,
                Err(_) => problems.push(format!("line {}: `{value}` is not a number", lineno + 1)),
            };
            match key {
                "radius_nm" => num(&mut cfg.radius_nm),
                "density_kg_m3" => num(&mut cfg.density_kg_m3),
                "specific_heat_j_kg_k" => num(&mut cfg.specific_heat_j_kg_k),
                "refractive_index_re" => num(&mut cfg.refractive_index_re),
                "refractive_index_im" => num(&mut cfg.refractive_index_im),
                "wavelength_nm" => num(&mut cfg.wavelength_nm),
                "omega0_khz" => num(&mut cfg.omega0_khz),
                "nbar" => num(&mut cfg.nbar),
                "tau0_ms" => num(&mut cfg.tau0_ms),
                "tau1_ms" => num(&mut cfg.tau1_ms),
                "tau2_us" => num(&mut cfg.tau2_us),
                "tau3_ms" => num(&mut cfg.tau3_ms),
                "tau4_ms" => num(&mut cfg.tau4_ms),
                "phi2_pi" => num(&mut cfg.phi2_pi),
                "omega4_khz" => num(&mut cfg.omega4_khz),
                "sigma5_nm" => num(&mut cfg.sigma5_nm),
                "temperature_k" => num(&mut cfg.temperature_k),
                "pressure_mbar" => num(&mut cfg.pressure_mbar),
                "gas_mass_amu" => num(&mut cfg.gas_mass_amu),
                "m_sigma" => num(&mut cfg.m_sigma),
                "q_target" => num(&mut cfg.q_target),
                "fringe_target_nm" => num(&mut cfg.fringe_target_nm),
                "tau_f_ms" => num(&mut cfg.tau_f_ms),
                "quantile" => num(&mut cfg.quantile),
                "g1_min" => num(&mut cfg.g1_min),
                "omega2_khz" => match value.parse::<f64>() {
                    Ok(v) => cfg.omega2_khz = Some(v),
                    Err(_) => problems.push(format!("line {}: bad omega2_khz", lineno + 1)),
                },
                "omega_p_khz" => match value.parse::<f64>() {
                    Ok(v) => cfg.omega_p_khz = Some(v),
                    Err(_) => problems.push(format!("line {}: bad omega_p_khz", lineno + 1)),
                },
                "bb_table" => cfg.bb_table = Some(PathBuf::from(value)),
                "n_thermal_runs" => match value.parse::<usize>() {
                    Ok(v) => cfg.n_thermal_runs = v,
                    Err(_) => problems.push(format!("line {}: bad n_thermal_runs", lineno + 1)),
                },
                "contour_points" => match value.parse::<usize>() {
                    Ok(v) => cfg.contour_points = v,
                    Err(_) => problems.push(format!("line {}: bad contour_points", lineno + 1)),
                },
                "oracle_seed" => match value.parse::<u64>() {
                    Ok(v) => cfg.oracle_seed = v,
                    Err(_) => problems.push(format!("line {}: bad oracle_seed", lineno + 1)),
                },
                "oracle_grid_n" => match value.parse::<usize>() {
                    Ok(v) => cfg.oracle_grid_n = Some(v),
                    Err(_) => problems.push(format!("line {}: bad oracle_grid_n", lineno + 1)),
                },
                "sweep_radius_nm" => match parse_list(value) {
                    Ok(v) => cfg.sweep_radius_nm = Some(v),
                    Err(e) => problems.push(format!("line {}: {e}", lineno + 1)),
                },
                "sweep_te_k" => match parse_list(value) {
                    Ok(v) => cfg.sweep_te_k = Some(v),
                    Err(e) => problems.push(format!("line {}: {e}", lineno + 1)),
                },
                "sweep_tauf_ms" => match parse_list(value) {
                    Ok(v) => cfg.sweep_tauf_ms = Some(v),
                    Err(e) => problems.push(format!("line {}: {e}", lineno + 1)),
                },
                other => problems.push(format!("line {}: unknown key `{other}`", lineno + 1)),
            }
        }
        cfg.validate_into(&mut problems);
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_str_exhaustive(&text)?;
        // bb_table paths are relative to the config file
        if let Some(t) = &cfg.bb_table {
            if t.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.bb_table = Some(dir.join(t));
                }
            }
        }
        Ok(cfg)
    }

    fn validate_into(&self, problems: &mut Vec<String>) {
        for (name, v, min_exclusive) in [
            ("radius_nm", self.radius_nm, true),
            ("density_kg_m3", self.density_kg_m3, true),
            ("wavelength_nm", self.wavelength_nm, true),
            ("omega0_khz", self.omega0_khz, true),
            ("omega4_khz", self.omega4_khz, true),
            ("temperature_k", self.temperature_k, true),
            ("pressure_mbar", self.pressure_mbar, true),
            ("gas_mass_amu", self.gas_mass_amu, true),
            ("m_sigma", self.m_sigma, true),
            ("q_target", self.q_target, true),
            ("tau_f_ms", self.tau_f_ms, true),
            ("nbar", self.nbar, false),
            ("tau1_ms", self.tau1_ms, false),
            ("tau2_us", self.tau2_us, false),
            ("tau3_ms", self.tau3_ms, false),
            ("tau4_ms", self.tau4_ms, false),
            ("sigma5_nm", self.sigma5_nm, false),
        ] {
            if v.is_nan() || (min_exclusive && v <= 0.0) || (!min_exclusive && v < 0.0) {
                problems.push(format!("{name} = {v} is out of range"));
            }
        }
        if !(self.phi2_pi > 0.0 && self.phi2_pi < 0.25) {
            problems.push(format!(
                "phi2_pi = {} must lie in (0, 0.25) so cos(2 phi2) > 0",
                self.phi2_pi
            ));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            problems.push(format!("quantile = {} must lie in (0, 1)", self.quantile));
        }
        if self.omega2_khz.is_some() && self.omega_p_khz.is_some() {
            problems.push("set either omega2_khz or omega_p_khz, not both".into());
        }
        if self.omega2_khz.map_or(false, |v| v <= 0.0)
            || self.omega_p_khz.map_or(false, |v| v <= 0.0)
        {
            problems.push("pulse frequency must be > 0".into());
        }
        if self.contour_points < 8 {
            problems.push("contour_points must be at least 8".into());
        }
        if let Some(n) = self.oracle_grid_n {
            if !n.is_power_of_two() {
                problems.push(format!("oracle_grid_n = {n} must be a power of two"));
            }
        }
    }

    pub fn material(&self) -> Material {
        Material {
            density: self.density_kg_m3,
            specific_heat: self.specific_heat_j_kg_k,
            refractive_index_re: self.refractive_index_re,
            refractive_index_im: self.refractive_index_im,
            wavelength: self.wavelength_nm * 1e-9,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius_nm * 1e-9
    }

    pub fn pressure_pa(&self) -> f64 {
        mbar_to_pa(self.pressure_mbar)
    }

    pub fn gas_mass(&self) -> f64 {
        self.gas_mass_amu * crate::constants::AMU
    }

    /// SI protocol parameters; ω_p derived from ω₂ through cos(2φ₂) when the
    /// stiffness reading is given.
    pub fn protocol(&self) -> Result<ProtocolParams> {
        let phi2 = self.phi2_pi * PI;
        let omega_p = match (self.omega_p_khz, self.omega2_khz) {
            (Some(wp), _) => 2.0 * PI * wp * 1e3,
            (None, Some(w2)) => 2.0 * PI * w2 * 1e3 / (2.0 * phi2).cos().sqrt(),
            (None, None) => {
                return Err(Error::Config(vec![
                    "one of omega2_khz or omega_p_khz is required".into(),
                ]))
            }
        };
        let params = ProtocolParams {
            omega0: 2.0 * PI * self.omega0_khz * 1e3,
            nbar: self.nbar,
            tau0: self.tau0_ms * 1e-3,
            tau1: self.tau1_ms * 1e-3,
            phi2,
            omega_p,
            tau2: self.tau2_us * 1e-6,
            tau3: self.tau3_ms * 1e-3,
            omega4: 2.0 * PI * self.omega4_khz * 1e3,
            tau4: self.tau4_ms * 1e-3,
            sigma5: self.sigma5_nm * 1e-9,
        };
        params.validate()?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_case_study() {
        let cfg = ScenarioConfig::default();
        let p = cfg.protocol().unwrap();
        assert!((p.omega0 - 2.0 * PI * 100e3).abs() < 1e-6);
        assert!((p.omega2_sq().sqrt() - 2.0 * PI * 2.5e3).abs() < 1e-6);
        assert!((p.tau1 - 1.34e-3).abs() < 1e-12);
        assert!((cfg.pressure_pa() - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn exhaustive_error_collection() {
        let text = "
            radius_nm = -3
            quantile = 1.5
            made_up_key = 12
            phi2_pi = 0.3
        ";
        match ScenarioConfig::from_str_exhaustive(text) {
            Err(Error::Config(problems)) => {
                assert!(problems.len() >= 4, "got {problems:?}");
                assert!(problems.iter().any(|p| p.contains("made_up_key")));
                assert!(problems.iter().any(|p| p.contains("radius_nm")));
                assert!(problems.iter().any(|p| p.contains("quantile")));
                assert!(problems.iter().any(|p| p.contains("phi2_pi")));
            }
            other => panic!("expected exhaustive config error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_conflicting_keys_rejected() {
        let text = "radius_nm = 50\nradius_nm = 60";
        assert!(matches!(ScenarioConfig::from_str_exhaustive(text), Err(Error::Config(_))));
        let both = "omega2_khz = 2.5\nomega_p_khz = 2.6";
        assert!(matches!(ScenarioConfig::from_str_exhaustive(both), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_lists_parse() {
        let cfg =
            ScenarioConfig::from_str_exhaustive("sweep_radius_nm = 40, 50, 60\n").unwrap();
        assert_eq!(cfg.sweep_radius_nm, Some(vec![40.0, 50.0, 60.0]));
        // an explicitly empty list is a vacuous sweep, not a scalar fallback
        let empty = ScenarioConfig::from_str_exhaustive("sweep_radius_nm =\n").unwrap();
        assert_eq!(empty.sweep_radius_nm, Some(vec![]));
        assert_eq!(empty.sweep_te_k, None);
    }
}
