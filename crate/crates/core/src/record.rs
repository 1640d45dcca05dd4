//! Result records and the CSV/JSON writers behind the batch front-end.
//! Every output file is self-describing: header comments carry units and the
//! tool version, and every black-body-table-dependent quantity is flagged.

use crate::budget::{BlurringBudget, LocalizationRates};
use crate::config::ScenarioConfig;
use crate::metrics::{Coherence, CoherenceReport, PatternMetrics};
use crate::pattern::{ExtremaPositions, FringePattern};
use serde::Serialize;
use std::time::{SystemTime, UNIX_EPOCH};

/// Derived quantities echoed for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub mass_kg: f64,
    pub mass_amu: f64,
    pub volume_m3: f64,
    pub x_zp_m: f64,
    pub sigma_x1_m: f64,
    /// ω₂²τ₂ as configured (1/s)
    pub omega2_sq_tau2_configured: f64,
    /// Mapping-condition value, exact form (1/s)
    pub omega2_sq_tau2_condition_exact: f64,
    /// Mapping-condition value, 1/τ₁ + 1/τ₃ limit (1/s)
    pub omega2_sq_tau2_condition_limit: f64,
    /// Residual quadratic-phase ratio σ_bc/Δx at the configured pulse
    pub sigma_bc_over_dx: f64,
}

/// Thermal-model summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalSummary {
    pub t_ss_full_power_k: f64,
    pub t_steady_k: f64,
    pub runs_to_steady: Option<usize>,
}

/// Gas-collision summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GasSummary {
    pub collision_rate_per_s: f64,
    pub no_collision_probability_axis: f64,
    pub pressure_for_quantile_mbar: f64,
    pub quantile: f64,
}

/// Full record of one scenario evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub tool_version: String,
    pub timestamp_unix_s: u64,
    pub inputs: ScenarioConfig,
    pub derived: DerivedQuantities,
    pub rates: LocalizationRates,
    pub budget: BlurringBudget,
    pub pattern: FringePattern,
    pub extrema: Option<ExtremaPositions>,
    pub metrics: PatternMetrics,
    pub coherence: CoherenceReport,
    pub thermal: Option<ThermalSummary>,
    pub gas: GasSummary,
    /// Every quantity depending on the user-supplied emission table is
    /// conditional; the flags say why.
    pub conditional_flags: Vec<String>,
    pub warnings: Vec<String>,
}

impl ResultRecord {
    /// Pretty JSON with a stable field order (timestamp is the only
    /// run-to-run difference for identical inputs).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialization")
    }
}

pub fn now_unix_s() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Two-column pattern CSV: x (m), probability density (1/m).
pub fn pattern_csv(xs: &[f64], density: &[f64], label: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {label}\n"));
    out.push_str(&format!("# tool version {}\n", crate::VERSION));
    out.push_str("# columns: x [m], density [1/m]\n");
    out.push_str("x_m,density_per_m\n");
    for (x, d) in xs.iter().zip(density) {
        out.push_str(&format!("{x:.9e},{d:.9e}\n"));
    }
    out
}

/// Thermal history CSV: time (s), internal temperature (K).
pub fn thermal_csv(history: &crate::environment::ThermalHistory) -> String {
    let mut out = String::new();
    out.push_str("# internal-temperature history over repeated protocol runs\n");
    out.push_str(&format!("# tool version {}\n", crate::VERSION));
    out.push_str("# columns: time [s], T_internal [K]\n");
    out.push_str("time_s,t_internal_k\n");
    for (t, temp) in history.time.iter().zip(&history.temperature) {
        out.push_str(&format!("{t:.9e},{temp:.6}\n"));
    }
    out
}

/// One sweep output row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub radius_nm: f64,
    pub temperature_k: f64,
    pub tau_f_ms: f64,
    pub feasible: bool,
    pub tau1_ms: f64,
    pub tau3_ms: f64,
    pub phi2_pi: f64,
    pub tau4_ms: f64,
    pub omega2_khz: f64,
    pub objective_nm: f64,
    pub visibility: f64,
    pub p_r: f64,
    pub quality: f64,
    pub conditional: bool,
    pub note: String,
}

pub fn sweep_csv(rows: &[SweepRow], objective_name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# parameter sweep; objective: {objective_name}\n"));
    out.push_str(&format!("# tool version {}\n", crate::VERSION));
    out.push_str(
        "# columns: radius [nm], T_e [K], tau_f [ms], feasible, tau1 [ms], tau3 [ms], \
         phi2 [pi], tau4 [ms], omega2 [kHz], objective [nm], v, p_r, q, conditional, note\n",
    );
    out.push_str(
        "radius_nm,temperature_k,tau_f_ms,feasible,tau1_ms,tau3_ms,phi2_pi,tau4_ms,\
         omega2_khz,objective_nm,visibility,p_r,quality,conditional,note\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.8},{},\"{}\"\n",
            r.radius_nm,
            r.temperature_k,
            r.tau_f_ms,
            r.feasible,
            r.tau1_ms,
            r.tau3_ms,
            r.phi2_pi,
            r.tau4_ms,
            r.omega2_khz,
            r.objective_nm,
            r.visibility,
            r.p_r,
            r.quality,
            r.conditional,
            r.note.replace('"', "'"),
        ));
    }
    out
}

/// Render a coherence value for summaries.
pub fn coherence_str(c: &Coherence) -> String {
    match c {
        Coherence::Finite(v) => format!("{v:.6e}"),
        Coherence::Unbounded => "unbounded".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_csv_has_header_and_units() {
        let csv = pattern_csv(&[0.0, 1e-9], &[1.0, 2.0], "unitary pattern");
        assert!(csv.starts_with("# unitary pattern"));
        assert!(csv.contains("x [m]"));
        assert!(csv.contains(crate::VERSION));
        assert_eq!(csv.lines().count(), 6);
    }
}
