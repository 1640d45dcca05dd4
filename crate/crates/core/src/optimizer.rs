//! Protocol parameter optimization on the iso-quality contour.
//!
//! Both procedures share the same structure: the mapping condition
//! eliminates ω₂²τ₂ → 1/τ₁ + 1/τ₃, leaving (τ₁, φ₂) free with τ₃ = τ_f − τ₁.
//! Combinations that put the physical blur exactly on the quality contour
//! form a one-dimensional feasible set; the optimizer scans φ₂, root-solves
//! the contour residual in τ₁ per φ₂, and maximizes the objective (certified
//! coherence length, or peak distance for coherent splitting) along the set,
//! with a golden-section refinement of φ₂ at the end. Everything is
//! deterministic: fixed grids, no random restarts.

use crate::budget::{blurring_budget, recoil_rate, step4_recoil, LocalizationRates};
use crate::contour::QualityContour;
use crate::environment::{internal_temperature_evolution, BlackBodyModel, DutyCycle};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::material::Particle;
use crate::metrics::{
    certified_lower_bound, g1_numeric, pattern_metrics_at, Coherence, PatternMetrics,
    PostPulseState,
};
use crate::pattern::{FringePattern, PatternEval};
use crate::protocol::{
    fringe_ratio, pattern_no_inversion, sigma_x_after_free_fall, CubicPulse, ProtocolParams,
};
use serde::Serialize;
use std::f64::consts::PI;

/// Fixed frequencies and pulse length of the optimization (overridable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerSettings {
    /// Trap frequency ω₀ (rad/s)
    pub omega0: f64,
    /// Inverted-potential frequency ω₄ (rad/s)
    pub omega4: f64,
    /// Pulse duration τ₂ (s); only the pulse area matters
    pub tau2: f64,
    /// Cooling time τ₀ (s) for the thermal duty cycle
    pub tau0: f64,
    /// Initial occupation n̄
    pub nbar: f64,
    /// Laser wavelength (m)
    pub wavelength: f64,
    /// φ₂ scan points
    pub n_phi: usize,
    /// τ₁ scan points per φ₂
    pub n_tau1: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            omega0: 2.0 * PI * 100e3,
            omega4: 2.0 * PI * 10e3,
            tau2: 10e-6,
            tau0: 2e-3,
            nbar: 0.5,
            wavelength: 1550e-9,
            n_phi: 48,
            n_tau1: 72,
        }
    }
}

/// The optimizer's objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    /// Maximize x_c* = 2σ_x(τ₁)σ_c/σ_Λ (inverted potential present)
    CertifiedCoherence,
    /// Maximize the peak distance 2.23·Δx(τ₃) (no inverted potential)
    PeakDistance,
}

/// An optimum with everything needed to reproduce it from scratch.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub objective_kind: Objective,
    pub tau1: f64,
    pub tau3: f64,
    pub phi2: f64,
    pub tau4: f64,
    /// ω₂²τ₂ from the mapping condition (1/s)
    pub omega2_sq_tau2: f64,
    /// Derived pulse stiffness ω₂ (rad/s)
    pub omega2: f64,
    /// x_c* or peak distance (m)
    pub objective: f64,
    pub pattern: FringePattern,
    pub metrics: PatternMetrics,
    /// g₁ between the two largest peaks (splitting objective only)
    pub g1_peaks: Option<f64>,
    /// Internal temperature used for the black-body rates (K)
    pub t_internal: Option<f64>,
    pub conditional_flags: Vec<String>,
}

/// Shape-space location of one (τ₁, φ₂) candidate.
#[derive(Debug, Clone, Copy)]
struct ShapePoint {
    p_c: f64,
    p_lambda: f64,
    sigma_x1: f64,
    ratio: f64,
    /// σ_c at τ₄ = 0 in the composition gauge (m)
    sigma_c0: f64,
}

struct SearchContext<'a> {
    particle: &'a Particle,
    settings: OptimizerSettings,
    tau_f: f64,
    lambda_bb: f64,
    contour: &'a QualityContour,
    objective_kind: Objective,
}

impl SearchContext<'_> {
    /// Closed-form shape parameters for one candidate; None when the
    /// geometry degenerates (τ₃ ≤ 0, pulse invalid, ...).
    fn shape(&self, tau1: f64, phi2: f64) -> Option<ShapePoint> {
        let s = &self.settings;
        let tau3 = self.tau_f - tau1;
        if tau1 <= 0.0 || tau3 <= 1e-7 {
            return None;
        }
        let w2sq_tau2 = 1.0 / tau1 + 1.0 / tau3;
        let omega2 = (w2sq_tau2 / s.tau2).sqrt();
        let pulse = CubicPulse::from_stiffness(omega2, phi2, s.wavelength).ok()?;
        let state0 = GaussianState::thermal(self.particle.mass, s.omega0, s.nbar).ok()?;
        let sigma_x1 =
            sigma_x_after_free_fall(&state0, self.particle.mass, s.omega0, tau1, self.lambda_bb)
                .ok()?;
        let ratio = fringe_ratio(sigma_x1, self.particle.mass, &pulse, s.tau2).ok()?;
        let lambda2 = recoil_rate(phi2, pulse.omega_p_sq().sqrt(), self.particle, s.wavelength);
        match self.objective_kind {
            Objective::CertifiedCoherence => {
                let rates = LocalizationRates {
                    lambda1: self.lambda_bb,
                    lambda2,
                    lambda3: self.lambda_bb,
                    lambda4: step4_recoil(s.omega4, self.particle, s.wavelength),
                };
                // shape parameters are invariant under tau4; evaluate the
                // composition at tau4 = 0 and pair it with the tau4 = 0 form
                // of sigma_c
                let params = ProtocolParams {
                    omega0: s.omega0,
                    nbar: s.nbar,
                    tau0: s.tau0,
                    tau1,
                    phi2,
                    omega_p: pulse.omega_p_sq().sqrt(),
                    tau2: s.tau2,
                    tau3,
                    omega4: s.omega4,
                    tau4: 0.0,
                    sigma5: 0.0,
                };
                let budget =
                    blurring_budget(&params, self.particle, &rates, sigma_x1, s.nbar).ok()?;
                let sigma_c0 = crate::constants::HBAR * (s.omega4 * tau3 + 1.0)
                    / (4.0 * sigma_x1 * self.particle.mass * s.omega4);
                let delta_x0 = ratio * sigma_c0;
                Some(ShapePoint {
                    p_c: 1.0 / ratio,
                    p_lambda: budget.sigma_lambda / delta_x0,
                    sigma_x1,
                    ratio,
                    sigma_c0,
                })
            }
            Objective::PeakDistance => {
                let sigma2 = (2.0 * crate::constants::HBAR * crate::constants::HBAR
                    * lambda2
                    * s.tau2)
                    .sqrt();
                let state1 = state0.free_fall(self.particle.mass, tau1, 0.0).ok()?;
                let sigma01 = {
                    // thermal-only momentum blur of the split state
                    let p = state1.purity;
                    (crate::constants::HBAR * crate::constants::HBAR / 4.0 * (1.0 - p * p)
                        / (p * p * sigma_x1 * sigma_x1))
                        .sqrt()
                };
                let pat = pattern_no_inversion(
                    sigma_x1,
                    self.particle.mass,
                    &pulse,
                    s.tau2,
                    tau3,
                    sigma2,
                    sigma01,
                )
                .ok()?;
                Some(ShapePoint {
                    p_c: pat.p_c,
                    p_lambda: pat.p_lambda,
                    sigma_x1,
                    ratio,
                    sigma_c0: pat.sigma_c,
                })
            }
        }
    }

    /// Signed distance of the physical blur from the contour at this shape;
    /// None outside the contour's feasible band.
    fn residual(&self, tau1: f64, phi2: f64) -> Option<f64> {
        let sp = self.shape(tau1, phi2)?;
        Some(sp.p_lambda - self.contour.p_lambda_at(sp.p_c)?)
    }

    fn objective_value(&self, sp: &ShapePoint, tau1: f64) -> f64 {
        match self.objective_kind {
            // x_c* = 2 sigma_x1 sigma_c/sigma_lambda = 2 sigma_x1 p_c/p_lambda
            Objective::CertifiedCoherence => 2.0 * sp.sigma_x1 * sp.p_c / sp.p_lambda,
            // 2.23 dx(tau3); tau3 enters through sigma_c0
            Objective::PeakDistance => {
                let _ = tau1;
                2.23 * sp.ratio * sp.sigma_c0
            }
        }
    }

    /// Best on-contour candidate at fixed φ₂: scan τ₁, bisect every sign
    /// change of the residual, keep the best objective.
    fn best_tau1(&self, phi2: f64) -> Option<(f64, f64)> {
        let n = self.settings.n_tau1;
        let lo = (1e-5f64).min(self.tau_f * 0.01);
        let hi = self.tau_f * 0.995;
        let taus: Vec<f64> =
            (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
        let res: Vec<Option<f64>> = taus.iter().map(|&t| self.residual(t, phi2)).collect();
        let mut best: Option<(f64, f64)> = None;
        for i in 1..n {
            let (Some(ra), Some(rb)) = (res[i - 1], res[i]) else { continue };
            if ra == 0.0 || ra.signum() == rb.signum() {
                continue;
            }
            let (mut a, mut b) = (taus[i - 1], taus[i]);
            let mut fa = ra;
            for _ in 0..70 {
                let m = 0.5 * (a + b);
                let fm = match self.residual(m, phi2) {
                    Some(v) => v,
                    None => break,
                };
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
                if (b - a) < 1e-12 * self.tau_f {
                    break;
                }
            }
            let root = 0.5 * (a + b);
            let sp = self.shape(root, phi2)?;
            let val = self.objective_value(&sp, root);
            if best.map_or(true, |(_, v)| val > v) {
                best = Some((root, val));
            }
        }
        best
    }
}

fn phi_grid(n: usize) -> Vec<f64> {
    let lo = 0.004 * PI / 4.0;
    let hi = 0.996 * PI / 4.0;
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn search(ctx: &SearchContext) -> Result<(f64, f64, f64)> {
    let phis = phi_grid(ctx.settings.n_phi);
    let mut candidates: Vec<(f64, f64, f64)> = Vec::new();
    for &phi2 in &phis {
        if let Some((tau1, val)) = ctx.best_tau1(phi2) {
            candidates.push((val, tau1, phi2));
        }
    }
    if candidates.is_empty() {
        return Err(Error::Infeasible(
            "no (tau1, phi2) combination satisfies the quality contour for these inputs".into(),
        ));
    }
    // deterministic lexicographic selection on (objective, tau1, phi2)
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.0 > best.0 || (c.0 == best.0 && (c.1, c.2) < (best.1, best.2)) {
            best = *c;
        }
    }
    // golden-section refinement of phi2 around the winning grid point
    let idx = phis.iter().position(|&p| p == best.2).unwrap();
    let lo = phis[idx.saturating_sub(1)];
    let hi = phis[(idx + 1).min(phis.len() - 1)];
    if hi > lo {
        let (phi_ref, neg) = crate::quad::golden_section_min(
            |phi| ctx.best_tau1(phi).map_or(f64::INFINITY, |(_, v)| -v),
            lo,
            hi,
            1e-5,
        );
        if -neg > best.0 {
            if let Some((tau1, val)) = ctx.best_tau1(phi_ref) {
                best = (val, tau1, phi_ref);
            }
        }
    }
    Ok(best)
}

/// Maximize the certified coherence length x_c*(τ₁) at fixed quality and
/// fringe spacing. `tau_f` is the free-fall budget τ₁ + τ₃; the returned τ₄
/// solves 1.75·Δx = `fringe_target`.
#[allow(clippy::too_many_arguments)]
pub fn optimize_coherence_length(
    particle: &Particle,
    t_env: f64,
    tau_f: f64,
    q_target: f64,
    fringe_target: f64,
    bb: Option<&BlackBodyModel>,
    contour: &QualityContour,
    settings: OptimizerSettings,
) -> Result<OptimizationResult> {
    if (contour.q_target - q_target).abs() > 1e-12 * q_target {
        return Err(Error::InvalidInput(format!(
            "contour was solved for q = {}, not the requested {q_target}",
            contour.q_target
        )));
    }
    let mut flags = Vec::new();
    // internal temperature from the duty cycle, then the black-body rate
    let (lambda_bb, t_internal) = match bb {
        Some(model) => {
            let duty = DutyCycle { tau_on: settings.tau0, tau_off: tau_f + settings.tau2 };
            let hist = internal_temperature_evolution(
                particle,
                model,
                t_env,
                settings.omega0,
                settings.wavelength,
                duty,
                400,
            )?;
            let rate = crate::environment::bb_localization_rate(
                particle,
                model,
                hist.t_steady,
                t_env,
            )?;
            flags.push(
                "black-body rates derived from the supplied emission table (conditional)".into(),
            );
            (rate, Some(hist.t_steady))
        }
        None => {
            flags.push(
                "no black-body table supplied: Lambda_bb = 0 fallback, coherence results \
                 conditional"
                    .into(),
            );
            (0.0, None)
        }
    };
    let ctx = SearchContext {
        particle,
        settings,
        tau_f,
        lambda_bb,
        contour,
        objective_kind: Objective::CertifiedCoherence,
    };
    let (_, tau1, phi2) = search(&ctx)?;
    let sp = ctx
        .shape(tau1, phi2)
        .ok_or_else(|| Error::Infeasible("optimum evaporated on re-evaluation".into()))?;
    let tau3 = tau_f - tau1;
    let w2sq_tau2 = 1.0 / tau1 + 1.0 / tau3;

    // fringe spacing fixes tau4: 1.75 dx(tau4) = target, dx growing as e^{w4 t4}
    let dx0 = sp.ratio * sp.sigma_c0;
    let growth = fringe_target / (1.75 * dx0);
    let tau4 = if growth > 1.0 {
        growth.ln() / settings.omega4
    } else {
        flags.push(format!(
            "fringe spacing already exceeds target at tau4 = 0 (1.75 dx = {:.3e} m)",
            1.75 * dx0
        ));
        0.0
    };
    if settings.omega4 * tau4 < 2.0 {
        flags.push(format!(
            "omega4*tau4 = {:.2} < 2: exponential-magnification forms degraded",
            settings.omega4 * tau4
        ));
    }
    let boost = (settings.omega4 * tau4).exp();
    let pattern =
        FringePattern::new(dx0 * boost, sp.sigma_c0 * boost, sp.p_lambda * dx0 * boost)?;
    let ev = PatternEval::new(&pattern)?;
    let ext = ev.refine_extrema()?;
    let metrics = pattern_metrics_at(&ev, &ext, 5.0);
    let objective = match certified_lower_bound(sp.sigma_x1, pattern.sigma_c, pattern.sigma_lambda)
    {
        Coherence::Finite(v) => v,
        Coherence::Unbounded => f64::INFINITY,
    };
    Ok(OptimizationResult {
        objective_kind: Objective::CertifiedCoherence,
        tau1,
        tau3,
        phi2,
        tau4,
        omega2_sq_tau2: w2sq_tau2,
        omega2: (w2sq_tau2 / settings.tau2).sqrt(),
        objective,
        pattern,
        metrics,
        g1_peaks: None,
        t_internal,
        conditional_flags: flags,
    })
}

/// Maximize the coherent peak distance 2.23·Δx(τ₃) without the inverted
/// potential, subject to the quality contour and g₁(max1, max2) ≥ `g1_min`.
/// Black-body and gas decoherence are excluded here; only pulse recoil and
/// the initial thermal occupation enter.
pub fn optimize_splitting(
    particle: &Particle,
    tau_f: f64,
    q_target: f64,
    g1_min: f64,
    contour: &QualityContour,
    settings: OptimizerSettings,
) -> Result<OptimizationResult> {
    if (contour.q_target - q_target).abs() > 1e-12 * q_target {
        return Err(Error::InvalidInput(format!(
            "contour was solved for q = {}, not the requested {q_target}",
            contour.q_target
        )));
    }
    let ctx = SearchContext {
        particle,
        settings,
        tau_f,
        lambda_bb: 0.0,
        contour,
        objective_kind: Objective::PeakDistance,
    };
    let (_, tau1, phi2) = search(&ctx)?;
    let tau3 = tau_f - tau1;
    let w2sq_tau2 = 1.0 / tau1 + 1.0 / tau3;
    let omega2 = (w2sq_tau2 / settings.tau2).sqrt();
    let pulse = CubicPulse::from_stiffness(omega2, phi2, settings.wavelength)?;
    let state0 = GaussianState::thermal(particle.mass, settings.omega0, settings.nbar)?;
    let state1 = state0.free_fall(particle.mass, tau1, 0.0)?;
    let sigma_x1 = state1.var_x.sqrt();
    let lambda2 = recoil_rate(phi2, pulse.omega_p_sq().sqrt(), particle, settings.wavelength);
    let sigma2 =
        (2.0 * crate::constants::HBAR * crate::constants::HBAR * lambda2 * settings.tau2).sqrt();
    let p = state1.purity;
    let sigma01 = (crate::constants::HBAR * crate::constants::HBAR / 4.0 * (1.0 - p * p)
        / (p * p * sigma_x1 * sigma_x1))
        .sqrt();
    let pattern = pattern_no_inversion(
        sigma_x1,
        particle.mass,
        &pulse,
        settings.tau2,
        tau3,
        sigma2,
        sigma01,
    )?;
    let ev = PatternEval::new(&pattern)?;
    let ext = ev.refine_extrema()?;
    let metrics = pattern_metrics_at(&ev, &ext, 5.0);
    let pps = PostPulseState::new(&state1, particle.mass, &pulse, settings.tau2, lambda2);
    let g1 = g1_numeric(&pps, ext.x_max1, ext.x_max2, tau3)?;
    let mut flags = Vec::new();
    if g1 < g1_min {
        return Err(Error::Infeasible(format!(
            "best on-contour candidate has g1 = {g1:.4} < required {g1_min}"
        )));
    }
    flags.push("black-body and gas decoherence excluded by construction here".into());
    let objective = (ext.x_max1 - ext.x_max2).abs();
    Ok(OptimizationResult {
        objective_kind: Objective::PeakDistance,
        tau1,
        tau3,
        phi2,
        tau4: 0.0,
        omega2_sq_tau2: w2sq_tau2,
        omega2,
        objective,
        pattern,
        metrics,
        g1_peaks: Some(g1),
        t_internal: None,
        conditional_flags: flags,
    })
}
