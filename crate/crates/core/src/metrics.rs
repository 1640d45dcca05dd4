//! Coherence quantification (g₁, coherence length, certified lower bound)
//! and interference-statistics metrics (visibility, relevant probability,
//! quality, required run counts).

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::pattern::{ExtremaPositions, PatternEval};
use crate::protocol::CubicPulse;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// A length that may be certified only as unbounded (pure state / zero blur).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Coherence {
    Finite(f64),
    Unbounded,
}

impl Coherence {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Coherence::Finite(v) => Some(*v),
            Coherence::Unbounded => None,
        }
    }
}

/// Coherence length x_c = 2Pσ_x/√(1−P²) of a Gaussian state; the width of
/// its first-order correlation function g₁.
pub fn coherence_length(state: &GaussianState) -> Coherence {
    if state.purity >= 1.0 {
        return Coherence::Unbounded;
    }
    let p = state.purity;
    Coherence::Finite(2.0 * p * state.var_x.sqrt() / (1.0 - p * p).sqrt())
}

/// Certified lower bound x_c*(τ₁) = 2σ_x(τ₁)·σ_c/σ_Λ, inferable from the
/// observed pattern without knowing the momentum-to-position map.
pub fn certified_lower_bound(sigma_x1: f64, sigma_c: f64, sigma_lambda: f64) -> Coherence {
    if sigma_lambda <= 0.0 {
        return Coherence::Unbounded;
    }
    Coherence::Finite(2.0 * sigma_x1 * sigma_c / sigma_lambda)
}

/// Fringe statistics of a decohered pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternMetrics {
    /// v = (max − min)/(max + min), from the second-largest fringe and the
    /// first minimum
    pub visibility: f64,
    /// probability mass between the two minima flanking the second fringe
    pub p_r: f64,
    /// q = v²·p_r
    pub quality: f64,
    /// runs for an m·σ fringe confirmation, ⌈(π²/4)m²/q⌉; None when washed out
    pub n_runs_5sigma: Option<u64>,
}

/// Run count for an m·σ confirmation at quality q.
pub fn required_runs(quality: f64, m_sigma: f64) -> Option<u64> {
    if quality <= 0.0 {
        return None;
    }
    Some((PI * PI / 4.0 * m_sigma * m_sigma / quality).ceil() as u64)
}

/// Compute visibility, p_r, quality and the run count from a pattern
/// evaluator. A washed-out pattern yields v = 0 with unbounded run count.
pub fn pattern_metrics(ev: &PatternEval, m_sigma: f64) -> PatternMetrics {
    match ev.refine_extrema() {
        Ok(ext) => pattern_metrics_at(ev, &ext, m_sigma),
        Err(_) => PatternMetrics { visibility: 0.0, p_r: 0.0, quality: 0.0, n_runs_5sigma: None },
    }
}

/// Same, reusing already-refined extrema.
pub fn pattern_metrics_at(
    ev: &PatternEval,
    ext: &ExtremaPositions,
    m_sigma: f64,
) -> PatternMetrics {
    let max = ev.decohered_at(ext.x_max2);
    let min = ev.decohered_at(ext.x_min1);
    let visibility = if max + min > 0.0 { ((max - min) / (max + min)).max(0.0) } else { 0.0 };
    let p_r = ev.decohered_mass(ext.x_min2, ext.x_min1);
    let quality = visibility * visibility * p_r;
    PatternMetrics { visibility, p_r, quality, n_runs_5sigma: required_runs(quality, m_sigma) }
}

/// Probability within the two largest peaks: mass to the right of the outer
/// minimum of the second fringe.
pub fn mass_within_two_peaks(ev: &PatternEval, ext: &ExtremaPositions) -> f64 {
    ev.decohered_mass(ext.x_min2, ev.window.1)
}

/// Coherence summary of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceReport {
    /// Gaussian-state coherence length x_c(τ₁)
    pub x_c: Coherence,
    /// Certified lower bound x_c*(τ₁)
    pub x_c_star: Coherence,
    /// g₁ between the two largest peaks, when evaluated
    pub g1_peaks: Option<f64>,
}

/// Gaussian state right after the cubic + harmonic pulse, carrying everything
/// the density-matrix quadrature needs. Built from the step-1 state, the
/// pulse geometry, and the pulse recoil rate.
#[derive(Debug, Clone, Copy)]
pub struct PostPulseState {
    a1: f64,
    a2: f64,
    a3: f64,
    /// u₂ = mω₂²/2 (J/m²)
    u2: f64,
    /// u₃ = mω₂²/l (J/m³)
    u3: f64,
    tau2: f64,
    /// σ₂² = 2ħ²Λ₂τ₂ ((kg·m/s)²)
    sigma2_sq: f64,
    mass: f64,
}

impl PostPulseState {
    pub fn new(
        state_after_step1: &GaussianState,
        mass: f64,
        pulse: &CubicPulse,
        tau2: f64,
        lambda2: f64,
    ) -> Self {
        PostPulseState {
            a1: state_after_step1.a1(),
            a2: state_after_step1.a2(),
            a3: state_after_step1.a3(),
            u2: pulse.u2(mass),
            u3: pulse.u3(mass),
            tau2,
            sigma2_sq: 2.0 * HBAR * HBAR * lambda2 * tau2,
            mass,
        }
    }
}

/// Scaled integrand parameters of the density-matrix element after the
/// second free evolution:
///
/// ρ(x̄+x′/2, x̄−x′/2; τ₃) ∝ ∫dΘ D^{−1/2} exp[iΘx̄/μ − (ΘG + x′/ħ)²/(4Dμ²)
///                                            − qΘ² + ic₃Θ³]
///
/// with D(Θ) = A − 3iu₃τ₂Θ, A = a₁ − a₃²/(4a₂), μ = τ₃/m, q = 1/(4a₂)+σ₂²/2,
/// c₃ = ħ²τ₂u₃/4 and G = 1 − μ(2u₂τ₂ + a₃/(2a₂)). The p-integration is the
/// analytic Gaussian step; the remaining Θ line is integrated numerically in
/// the dimensionless variable t = Θ√q.
struct ThetaIntegrand {
    eta: f64,
    c_hat: f64,
    x_scale: f64,
    w_hat: f64,
    xp_scale: f64,
}

impl ThetaIntegrand {
    fn new(s: &PostPulseState, tau3: f64) -> Result<Self> {
        if !(tau3 > 0.0) {
            return Err(Error::InvalidInput(format!("tau3 must be > 0, got {tau3}")));
        }
        let mu = tau3 / s.mass;
        let a_cap = s.a1 - s.a3 * s.a3 / (4.0 * s.a2);
        let q = 1.0 / (4.0 * s.a2) + s.sigma2_sq / 2.0;
        let theta_s = 1.0 / q.sqrt();
        let big_g = 1.0 - mu * (2.0 * s.u2 * s.tau2 + s.a3 / (2.0 * s.a2));
        Ok(ThetaIntegrand {
            eta: 3.0 * s.u3 * s.tau2 * theta_s / a_cap,
            c_hat: HBAR * HBAR * s.tau2 * s.u3 / 4.0 * theta_s.powi(3),
            x_scale: theta_s / mu,
            w_hat: big_g * theta_s / (2.0 * mu * a_cap.sqrt()),
            xp_scale: 1.0 / (2.0 * HBAR * mu * a_cap.sqrt()),
        })
    }

    /// Integrand at scaled node t for mean position `x_bar` and separation
    /// `x_prime`.
    fn eval(&self, t: f64, x_bar: f64, x_prime: f64) -> Complex64 {
        let root = Complex64::new(1.0, -self.eta * t).powf(-0.5);
        let xh = x_prime * self.xp_scale;
        let shift = Complex64::new(self.w_hat * t + xh, 0.0).powi(2)
            / Complex64::new(1.0, -self.eta * t);
        let phase = Complex64::new(0.0, x_bar * self.x_scale * t + self.c_hat * t * t * t);
        let damp = Complex64::new(-t * t, 0.0);
        root * (phase + damp - shift).exp()
    }

    /// Local oscillation frequency bound, used to seed quadrature panels.
    /// The shift term only oscillates through the Lorentzian factor; with
    /// η = 0 it is pure damping and contributes no phase.
    fn local_freq(&self, t: f64, x_bar: f64, x_prime: f64) -> f64 {
        let lorentz = self.eta / (1.0 + (self.eta * t).powi(2));
        let xh = x_prime * self.xp_scale;
        let shift = self.w_hat * t + xh;
        x_bar.abs() * self.x_scale
            + 3.0 * self.c_hat.abs() * t * t
            + (0.5 + shift * shift + 2.0 * self.w_hat.abs() * shift.abs() * t.abs()) * lorentz
    }

    fn panel(&self, rule: &crate::quad::GlRule, a: f64, b: f64, xb: f64, xp: f64) -> Complex64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (node, weight) in rule.nodes().iter().zip(rule.weights()) {
            acc += *weight * self.eval(c + h * node, xb, xp);
        }
        acc * h
    }

    /// ∫ f dt over the damped support. Panels are seeded by the local phase
    /// gradient and bisected until an embedded GL16/GL32 comparison meets the
    /// absolute tolerance (the integrand is O(1) by construction). Returns
    /// the value and the accumulated error estimate.
    fn integrate(&self, x_bar: f64, x_prime: f64, abs_tol: f64) -> (Complex64, f64) {
        let coarse = crate::quad::GlRule::new(16);
        let fine = crate::quad::GlRule::new(32);
        let t_max = 8.0;
        // When the shift damping is strong the integrand collapses to a bump
        // of width ~1/√(1+ŵ²) around t₀; panels must resolve it explicitly
        // or the embedded error check can miss it entirely.
        let xh = x_prime * self.xp_scale;
        let bump_center = (-self.w_hat * xh / (1.0 + self.w_hat * self.w_hat)).clamp(-t_max, t_max);
        let bump_width = 1.0 / (1.0 + self.w_hat * self.w_hat).sqrt();
        let mut seeds = Vec::new();
        let mut t = -t_max;
        while t < t_max - 1e-9 {
            let f = self.local_freq(t, x_bar, x_prime).max(1.0);
            let damping_scale = bump_width.max((t - bump_center).abs() / 4.0);
            let width = (2.0 * PI / (3.0 * f))
                .min(0.5)
                .min(damping_scale)
                .min(t_max - t)
                .max(1e-6);
            seeds.push((t, t + width));
            t += width;
        }
        let per_unit = abs_tol / (2.0 * t_max);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut stack: Vec<(f64, f64, u32)> = seeds.into_iter().map(|(a, b)| (a, b, 0)).collect();
        while let Some((a, b, depth)) = stack.pop() {
            let i16 = self.panel(&coarse, a, b, x_bar, x_prime);
            let i32v = self.panel(&fine, a, b, x_bar, x_prime);
            let diff = (i16 - i32v).norm();
            if diff <= per_unit * (b - a) || depth >= 14 {
                acc += i32v;
                err += diff;
            } else {
                let m = 0.5 * (a + b);
                stack.push((a, m, depth + 1));
                stack.push((m, b, depth + 1));
            }
        }
        (acc, err)
    }
}

/// First-order correlation |g₁(x₁, x₂, τ₃)| of the state after the second
/// free evolution, by analytic p-integration and adaptive Θ-quadrature.
pub fn g1_numeric(s: &PostPulseState, x1: f64, x2: f64, tau3: f64) -> Result<f64> {
    let integrand = ThetaIntegrand::new(s, tau3)?;
    let x_bar = 0.5 * (x1 + x2);
    let x_prime = x1 - x2;
    const TOL: f64 = 1e-9;
    let (off, e0) = integrand.integrate(x_bar, x_prime, TOL);
    let (d1, e1) = integrand.integrate(x1, 0.0, TOL);
    let (d2, e2) = integrand.integrate(x2, 0.0, TOL);
    let scale = d1.norm().max(d2.norm());
    let residual = (e0 + e1 + e2) / scale.max(1e-30);
    if residual > 1e-7 {
        return Err(Error::QuadratureFailure(format!(
            "theta quadrature did not converge: residual {residual:.3e} of diagonal scale"
        )));
    }
    let denom = (d1.re.max(0.0) * d2.re.max(0.0)).sqrt();
    if denom <= 0.0 {
        return Err(Error::QuadratureFailure(
            "diagonal density vanished; g1 undefined here".into(),
        ));
    }
    Ok((off.norm() / denom).min(1.0))
}

/// Diagonal density (unnormalized) from the Θ-integral route; used by the
/// oracle's convolution cross-check.
pub fn theta_route_density(s: &PostPulseState, tau3: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let integrand = ThetaIntegrand::new(s, tau3)?;
    Ok(xs.iter().map(|&x| integrand.integrate(x, 0.0, 1e-9).0.re.max(0.0)).collect())
}

/// Canonical Θ-integral density for a bare pattern triple (Δx, σ_c, σ_Λ):
/// the same integral family with parameters reconstructed from the pattern.
/// The scaled damping e^{−t²} carries the total variance, 2x₀² = σ_c² + σ_Λ²,
/// the cubic coefficient is ĉ = (Δx/x₀)³/12, and the branch-root coefficient
/// is locked to the cubic by η = 6ĉ(x₀/σ_c)².
pub fn theta_route_density_for_pattern(
    pattern: &crate::pattern::FringePattern,
    xs: &[f64],
) -> Vec<f64> {
    let x0 = ((pattern.sigma_c.powi(2) + pattern.sigma_lambda.powi(2)) / 2.0).sqrt();
    let c_hat = (pattern.delta_x / x0).powi(3) / 12.0;
    let eta = 6.0 * c_hat * (x0 / pattern.sigma_c).powi(2);
    let integrand =
        ThetaIntegrand { eta, c_hat, x_scale: 1.0 / x0, w_hat: 0.0, xp_scale: 0.0 };
    xs.iter().map(|&x| integrand.integrate(x, 0.0, 1e-9).0.re.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianState;
    use crate::material::{Material, Particle};
    use crate::pattern::FringePattern;

    const W0: f64 = 2.0 * PI * 100e3;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn coherence_length_basics() {
        let p = Particle::from_radius(50e-9, Material::silica()).unwrap();
        let pure = GaussianState::thermal(p.mass, W0, 0.0).unwrap();
        assert_eq!(coherence_length(&pure), Coherence::Unbounded);
        let th = GaussianState::thermal(p.mass, W0, 0.5).unwrap();
        // P = 1/2: x_c = 2·(1/2)σ_x/√(3/4) = (2/√3)σ_x
        let xc = coherence_length(&th).finite().unwrap();
        assert!(rel(xc, 2.0 / 3.0_f64.sqrt() * th.var_x.sqrt()) < 1e-12);
        // at separation x_c the Gaussian g1 form is e^{-1/2}
        let g = (-(xc * xc) / (2.0 * xc * xc)).exp();
        assert!(rel(g, (-0.5_f64).exp()) < 1e-15);
    }

    #[test]
    fn certified_bound_scaling() {
        let b1 = certified_lower_bound(1e-8, 4e-10, 1.2e-9).finite().unwrap();
        let b2 = certified_lower_bound(1e-8, 4e-10, 0.6e-9).finite().unwrap();
        assert!(rel(b2, 2.0 * b1) < 1e-12);
        assert_eq!(certified_lower_bound(1e-8, 4e-10, 0.0), Coherence::Unbounded);
    }

    #[test]
    fn run_count_formula() {
        // q = 0.005, m = 5 -> N = ceil(pi²/4·25/0.005) = ceil(12337.006) = 12338
        let n = required_runs(0.005, 5.0).unwrap();
        assert_eq!(n, 12338);
        assert!((n as f64 - 1.2e4).abs() / 1.2e4 < 0.03);
        assert_eq!(required_runs(0.0, 5.0), None);
    }

    #[test]
    fn metrics_monotone_in_quality_inputs() {
        // N decreasing in both v and p_r
        let n = |v: f64, pr: f64| required_runs(v * v * pr, 5.0).unwrap();
        assert!(n(0.3, 0.1) < n(0.2, 0.1));
        assert!(n(0.3, 0.2) < n(0.3, 0.1));
    }

    #[test]
    fn washed_out_gives_zero_visibility() {
        let pat = FringePattern::normalized(0.25, 2.5).unwrap();
        let ev = PatternEval::new(&pat).unwrap();
        let m = pattern_metrics(&ev, 5.0);
        assert_eq!(m.visibility, 0.0);
        assert_eq!(m.n_runs_5sigma, None);
    }

    #[test]
    fn certified_bound_tight_for_thermal_only_blur() {
        // when the entire blur comes from the initial-mixedness term, the
        // certified bound saturates the Gaussian coherence length exactly
        let p = Particle::from_radius(50e-9, Material::silica()).unwrap();
        let params = crate::config::ScenarioConfig::default().protocol().unwrap();
        let s0 = GaussianState::thermal(p.mass, W0, 0.5).unwrap();
        let sigma_x1 =
            crate::protocol::sigma_x_after_free_fall(&s0, p.mass, W0, params.tau1, 0.0).unwrap();
        let budget = crate::budget::blurring_budget(
            &params,
            &p,
            &crate::budget::LocalizationRates::default(),
            sigma_x1,
            0.5,
        )
        .unwrap();
        let sigma_c = crate::protocol::sigma_c_with_inversion(
            sigma_x1,
            p.mass,
            params.tau3,
            params.omega4,
            params.tau4,
        )
        .unwrap();
        let bound = certified_lower_bound(sigma_x1, sigma_c, budget.sigma_lambda)
            .finite()
            .unwrap();
        let s1 = s0.free_fall(p.mass, params.tau1, 0.0).unwrap();
        let xc = coherence_length(&s1).finite().unwrap();
        assert!(
            ((bound - xc) / xc).abs() < 1e-10,
            "bound {bound:.6e} vs x_c(tau1) {xc:.6e}"
        );
    }

    #[test]
    fn g1_diagonal_is_one() {
        let p = Particle::from_radius(50e-9, Material::silica()).unwrap();
        let s1 = GaussianState::thermal(p.mass, W0, 0.5)
            .unwrap()
            .free_fall(p.mass, 0.92e-3, 0.0)
            .unwrap();
        let pulse = CubicPulse::from_stiffness(2.0 * PI * 1.66e3, 0.9 * PI / 4.0, 1550e-9).unwrap();
        let pps = PostPulseState::new(&s1, p.mass, &pulse, 10e-6, 0.0);
        for x in [-3e-8, 0.0, 2e-8] {
            let g = g1_numeric(&pps, x, x, 349e-3).unwrap();
            assert!((g - 1.0).abs() < 1e-10, "g1({x},{x}) = {g}");
        }
    }

    #[test]
    fn g1_symmetric_in_arguments() {
        let p = Particle::from_radius(50e-9, Material::silica()).unwrap();
        let s1 = GaussianState::thermal(p.mass, W0, 0.5)
            .unwrap()
            .free_fall(p.mass, 0.92e-3, 0.0)
            .unwrap();
        let pulse = CubicPulse::from_stiffness(2.0 * PI * 1.66e3, 0.9 * PI / 4.0, 1550e-9).unwrap();
        let pps = PostPulseState::new(&s1, p.mass, &pulse, 10e-6, 3e21);
        let a = g1_numeric(&pps, -2.5e-8, -5.3e-8, 349e-3).unwrap();
        let b = g1_numeric(&pps, -5.3e-8, -2.5e-8, 349e-3).unwrap();
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }

    #[test]
    fn g1_gaussian_limit_matches_closed_form() {
        // no cubic, no pulse recoil: the machinery must reproduce the
        // Gaussian g1 = exp(-(x2-x1)²/(2 x_c²)) of the freely evolved state
        let p = Particle::from_radius(50e-9, Material::silica()).unwrap();
        let tau1 = 0.9e-3;
        let tau3 = 2.3e-3;
        let s1 = GaussianState::thermal(p.mass, W0, 0.5)
            .unwrap()
            .free_fall(p.mass, tau1, 0.0)
            .unwrap();
        let pulse = CubicPulse::from_intensity(1.0, 0.0, 1550e-9).unwrap();
        let mut pps = PostPulseState::new(&s1, p.mass, &pulse, 10e-6, 0.0);
        pps.u2 = 0.0; // pulse off entirely
        pps.u3 = 0.0;
        let s3 = s1.free_fall(p.mass, tau3, 0.0).unwrap();
        let xc = coherence_length(&s3).finite().unwrap();
        for (x1, x2) in [(0.0, xc), (0.0, 2.0 * xc), (-0.7 * xc, 0.9 * xc)] {
            let got = g1_numeric(&pps, x1, x2, tau3).unwrap();
            let want = (-(x2 - x1).powi(2) / (2.0 * xc * xc)).exp();
            assert!(
                (got - want).abs() < 1e-4,
                "g1({x1:.2e},{x2:.2e}) = {got:.6} want {want:.6}"
            );
        }
    }
}
