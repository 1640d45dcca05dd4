//! Environmental physics: internal-temperature dynamics driven by black-body
//! exchange and laser absorption, the resulting localization rates, and
//! residual-gas collision statistics.

use crate::constants::{AMU, C_LIGHT, K_B};
use crate::error::{Error, Result};
use crate::material::Particle;
use crate::ode::integrate_adaptive;
use crate::quad::bisect;
use serde::Serialize;
use std::cell::Cell;
use std::f64::consts::PI;

/// Low-temperature extrapolation of the emitted/absorbed power per unit
/// volume, p_bb(T < 100 K) ≈ T^{−5.79}·exp(3.14 ln²T − 0.265 ln³T).
/// Output interpreted as W/m³ with unit prefactor (a plot-axis convention,
/// recorded as an assumption in result metadata).
pub fn pbb_low_t(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be > 0 K, got {t}")));
    }
    let l = t.ln();
    Ok(t.powf(-5.79) * (3.14 * l * l - 0.265 * l * l * l).exp())
}

/// Low-temperature extrapolation of the localization rate per unit volume,
/// γ_bb(T < 100 K) ≈ 1.91e31·T^{8.38}·exp(−0.19 ln²T), in 1/(m²·s·m³) with
/// the same unit caveat. The extrapolation is known to overestimate at very
/// low T (it is enormous already at 1 K).
pub fn gammabb_low_t(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be > 0 K, got {t}")));
    }
    let l = t.ln();
    Ok(1.91e31 * t.powf(8.38) * (-0.19 * l * l).exp())
}

/// One row of a black-body emission table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BbEntry {
    pub t: f64,
    pub p_bb: f64,
    pub gamma_bb: f64,
}

/// Black-body model: a user-supplied table for T ≥ 100 K (bulk emission data
/// are not derivable from first principles here) stitched to the
/// low-temperature extrapolation formulas below 100 K. To keep the model
/// continuous the formulas are rescaled to match the table at the junction;
/// every result that depends on the table carries a "conditional" flag
/// upstream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlackBodyModel {
    table: Vec<BbEntry>,
    pub use_low_t_extrapolation: bool,
    p_scale: f64,
    g_scale: f64,
}

pub const LOW_T_JUNCTION: f64 = 100.0;

impl BlackBodyModel {
    pub fn from_table(mut table: Vec<BbEntry>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::InvalidInput("black-body table needs at least 2 rows".into()));
        }
        table.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        for w in table.windows(2) {
            if w[1].t <= w[0].t {
                return Err(Error::InvalidInput(format!(
                    "black-body table temperatures must be strictly increasing near {} K",
                    w[0].t
                )));
            }
        }
        for e in &table {
            if !(e.t > 0.0) || !(e.p_bb > 0.0) || !(e.gamma_bb > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "black-body table entries must be positive (log-log interpolation); \
                     offending row at T = {} K",
                    e.t
                )));
            }
        }
        let mut model =
            BlackBodyModel { table, use_low_t_extrapolation: true, p_scale: 1.0, g_scale: 1.0 };
        // continuity scaling of the low-T formulas at the junction
        if model.table[0].t <= LOW_T_JUNCTION {
            let pj = model.interp(LOW_T_JUNCTION, |e| e.p_bb)?;
            let gj = model.interp(LOW_T_JUNCTION, |e| e.gamma_bb)?;
            model.p_scale = pj / pbb_low_t(LOW_T_JUNCTION)?;
            model.g_scale = gj / gammabb_low_t(LOW_T_JUNCTION)?;
        }
        Ok(model)
    }

    /// Parse the CSV format `T_K,p_bb_W_per_m3,gamma_bb_per_m5s` (comments
    /// with `#`).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 0 || line.starts_with("T_K") {
                // header
                if !line.starts_with("T_K,p_bb_W_per_m3,gamma_bb_per_m5s") {
                    problems.push(format!(
                        "line {}: expected header T_K,p_bb_W_per_m3,gamma_bb_per_m5s",
                        lineno + 1
                    ));
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                problems.push(format!("line {}: expected 3 comma-separated fields", lineno + 1));
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push(BbEntry { t: v[0], p_bb: v[1], gamma_bb: v[2] }),
                Err(_) => problems.push(format!("line {}: non-numeric field", lineno + 1)),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Self::from_table(rows)
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn table_range(&self) -> (f64, f64) {
        (self.table[0].t, self.table[self.table.len() - 1].t)
    }

    fn interp(&self, t: f64, field: impl Fn(&BbEntry) -> f64) -> Result<f64> {
        let (lo, hi) = self.table_range();
        if t < lo || t > hi {
            return Err(Error::TableRange(format!(
                "T = {t:.2} K outside tabulated range [{lo:.1}, {hi:.1}] K"
            )));
        }
        let idx = self.table.partition_point(|e| e.t <= t).min(self.table.len() - 1);
        let (a, b) = (&self.table[idx - 1], &self.table[idx]);
        // log-log linear: exact on table nodes and on power laws
        let w = (t.ln() - a.t.ln()) / (b.t.ln() - a.t.ln());
        let fa = field(a).ln();
        let fb = field(b).ln();
        Ok((fa + w * (fb - fa)).exp())
    }

    /// Emitted/absorbed power per unit volume (W/m³).
    pub fn p_bb(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("temperature must be > 0 K, got {t}")));
        }
        if t < LOW_T_JUNCTION && self.use_low_t_extrapolation {
            return Ok(self.p_scale * pbb_low_t(t)?);
        }
        self.interp(t, |e| e.p_bb)
    }

    /// Localization rate per unit volume (1/(m²·s·m³)).
    pub fn gamma_bb(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("temperature must be > 0 K, got {t}")));
        }
        if t < LOW_T_JUNCTION && self.use_low_t_extrapolation {
            return Ok(self.g_scale * gammabb_low_t(t)?);
        }
        self.interp(t, |e| e.gamma_bb)
    }
}

/// Absorbed laser power P_abs = mω₀²cβ/k of a particle trapped at an
/// intensity anti-node.
pub fn absorbed_power(particle: &Particle, omega0: f64, wavelength: f64) -> f64 {
    let k = 2.0 * PI / wavelength;
    particle.mass * omega0 * omega0 * C_LIGHT * particle.beta_abs / k
}

/// Laser on for `tau_on` (cooling), off for `tau_off` (protocol), repeated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DutyCycle {
    pub tau_on: f64,
    pub tau_off: f64,
}

impl DutyCycle {
    pub fn factor(&self) -> f64 {
        self.tau_on / (self.tau_on + self.tau_off)
    }
}

/// Internal-temperature trace over repeated protocol runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalHistory {
    /// Segment-boundary times (s)
    pub time: Vec<f64>,
    /// Internal temperature at those times (K)
    pub temperature: Vec<f64>,
    /// First cycle whose end-to-end change fell below 1 mK
    pub runs_to_steady: Option<usize>,
    /// Dynamical steady state (center of the steady cycle oscillation)
    pub t_steady: f64,
}

/// Steady-state internal temperature solving
/// duty·P_abs + V·p_bb(T_e) − V·p_bb(T_ss) = 0.
pub fn steady_state_temperature(
    particle: &Particle,
    bb: &BlackBodyModel,
    t_env: f64,
    omega0: f64,
    wavelength: f64,
    duty_factor: f64,
) -> Result<f64> {
    let p_abs = absorbed_power(particle, omega0, wavelength);
    let rhs = bb.p_bb(t_env)? + duty_factor * p_abs / particle.volume;
    let (_, hi) = bb.table_range();
    if bb.p_bb(hi)? < rhs {
        return Err(Error::TableRange(format!(
            "steady state exceeds tabulated maximum {hi:.1} K"
        )));
    }
    let lo = t_env.min(hi * 0.999);
    let f = |t: f64| bb.p_bb(t).unwrap_or(f64::INFINITY) - rhs;
    if f(lo) > 0.0 {
        // emission already exceeds input below the environment temperature
        return Ok(lo);
    }
    bisect(f, lo, hi, 1e-9 * hi)
}

/// Integrate the internal-temperature equation
/// m·c_m·dT/dt = P_abs(t) + V·p_bb(T_e) − V·p_bb(T_i)
/// over `n_runs` duty cycles (laser off for τ_off, then on for τ_on),
/// starting from the full-power steady state.
pub fn internal_temperature_evolution(
    particle: &Particle,
    bb: &BlackBodyModel,
    t_env: f64,
    omega0: f64,
    wavelength: f64,
    duty: DutyCycle,
    n_runs: usize,
) -> Result<ThermalHistory> {
    let t_ss = steady_state_temperature(particle, bb, t_env, omega0, wavelength, 1.0)?;
    let p_abs = absorbed_power(particle, omega0, wavelength);
    let heat_capacity = particle.mass * particle.material.specific_heat;
    let v = particle.volume;
    let p_env = bb.p_bb(t_env)?;
    let out_of_range: Cell<Option<f64>> = Cell::new(None);
    let (range_lo, range_hi) = bb.table_range();
    let emit = |t: f64| -> f64 {
        match bb.p_bb(t) {
            Ok(p) => p,
            Err(_) => {
                out_of_range.set(Some(t));
                // clamp so the integrator can finish; the error is raised after
                let tc = t.clamp(range_lo.min(1.0), range_hi);
                bb.p_bb(tc).unwrap_or(p_env)
            }
        }
    };
    let rhs = move |power_on: bool| {
        move |_: f64, y: &[f64; 1]| {
            let p_laser = if power_on { p_abs } else { 0.0 };
            [(p_laser + v * (p_env - emit(y[0]))) / heat_capacity]
        }
    };
    let mut t_i = t_ss;
    let mut time = 0.0;
    let mut history = ThermalHistory {
        time: vec![0.0],
        temperature: vec![t_ss],
        runs_to_steady: None,
        t_steady: t_ss,
    };
    let mut last_mid = t_ss;
    for run in 1..=n_runs {
        let cycle_start = t_i;
        let after_off =
            integrate_adaptive(rhs(false), 0.0, duty.tau_off, [t_i], 1e-8, 1e-8)[0];
        time += duty.tau_off;
        history.time.push(time);
        history.temperature.push(after_off);
        let after_on =
            integrate_adaptive(rhs(true), 0.0, duty.tau_on, [after_off], 1e-8, 1e-8)[0];
        time += duty.tau_on;
        history.time.push(time);
        history.temperature.push(after_on);
        t_i = after_on;
        last_mid = 0.5 * (after_off + after_on);
        if history.runs_to_steady.is_none() && (t_i - cycle_start).abs() < 1e-3 {
            history.runs_to_steady = Some(run);
        }
    }
    if let Some(t) = out_of_range.get() {
        return Err(Error::TableRange(format!(
            "internal temperature reached {t:.2} K, outside the tabulated range"
        )));
    }
    history.t_steady = last_mid;
    Ok(history)
}

/// Black-body localization rate Λ_bb = V·γ_bb(T_i) + V·γ_bb(T_e): photon
/// emission plus absorption (thermal-photon scattering is negligible).
pub fn bb_localization_rate(
    particle: &Particle,
    bb: &BlackBodyModel,
    t_internal: f64,
    t_env: f64,
) -> Result<f64> {
    Ok(particle.volume * (bb.gamma_bb(t_internal)? + bb.gamma_bb(t_env)?))
}

/// Residual gas in the chamber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasModel {
    /// Molecular mass (kg); defaults to H₂
    pub gas_mass: f64,
    /// Gas temperature (K)
    pub temperature: f64,
    /// Pressure (Pa)
    pub pressure: f64,
}

impl GasModel {
    pub fn hydrogen(temperature: f64, pressure: f64) -> Self {
        GasModel { gas_mass: 2.0 * AMU, temperature, pressure }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gas_mass > 0.0) || !(self.temperature > 0.0) || !(self.pressure > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gas model needs positive mass/temperature/pressure, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Mean Maxwell–Boltzmann speed ⟨v_g⟩ = √(8k_B T/(π m_g)).
    pub fn mean_speed(&self) -> f64 {
        (8.0 * K_B * self.temperature / (PI * self.gas_mass)).sqrt()
    }
}

/// Average gas collision rate γ_g = 8πPr²/(m_g⟨v_g⟩).
pub fn gas_collision_rate(gas: &GasModel, radius: f64) -> Result<f64> {
    gas.validate()?;
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be > 0, got {radius}")));
    }
    Ok(8.0 * PI * gas.pressure * radius * radius / (gas.gas_mass * gas.mean_speed()))
}

/// Poisson probability of zero collisions in `tau_f`; with `axis_only` the
/// rate for momentum transfer along the interference axis is γ_g/3.
pub fn no_collision_probability(
    gas: &GasModel,
    radius: f64,
    tau_f: f64,
    axis_only: bool,
) -> Result<f64> {
    if tau_f < 0.0 {
        return Err(Error::InvalidInput(format!("tau_f must be >= 0, got {tau_f}")));
    }
    let rate = gas_collision_rate(gas, radius)?;
    let eff = if axis_only { rate / 3.0 } else { rate };
    Ok((-eff * tau_f).exp())
}

/// Pressure at which the axis collision-free probability equals `quantile`:
/// exp(−γ_g(P)·τ_f/3) = quantile, closed form since γ_g is linear in P.
pub fn pressure_for_quantile(
    gas_mass: f64,
    temperature: f64,
    radius: f64,
    tau_f: f64,
    quantile: f64,
) -> Result<f64> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidInput(format!("quantile must be in (0,1), got {quantile}")));
    }
    if !(tau_f > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidInput("need tau_f > 0 and radius > 0".into()));
    }
    let probe = GasModel { gas_mass, temperature, pressure: 1.0 };
    probe.validate()?;
    let rate_per_pa = 8.0 * PI * radius * radius / (gas_mass * probe.mean_speed());
    Ok(-3.0 * quantile.ln() / (rate_per_pa * tau_f))
}

/// mbar → Pa.
pub fn mbar_to_pa(mbar: f64) -> f64 {
    mbar * 100.0
}

/// Pa → mbar.
pub fn pa_to_mbar(pa: f64) -> f64 {
    pa / 100.0
}
