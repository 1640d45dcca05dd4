//! The interference pattern: an Airy amplitude convolved with a coherence
//! kernel, squared, and blurred by the decoherence Gaussian.
//!
//! Unitary density:  P(x) = [Ai(x/Δx) ∗ exp(−x²/4σ_c²)]² / (√(2π)·Δx²·σ_c)
//! Decohered density: P_D = P ∗ N(0, σ_Λ²)
//!
//! The prefactor normalizes P over the whole line (Parseval), so pointwise
//! values are absolutely normalized without integrating any grid. The fringe
//! envelope decays slowly (the mass beyond −X·Δx is erfc(p_c√(2X))), so
//! grids that must capture a given tail mass are sized accordingly.

use crate::airy::{ai, AI_PRIME_ZEROS, AI_ZEROS};
use crate::error::{Error, Result};
use crate::quad::{erfc_inv_approx, golden_section_min, GlRule};
use serde::Serialize;
use std::f64::consts::PI;

/// The (Δx, σ_c, σ_Λ) triple that fully determines the final probability
/// density, with the derived shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringePattern {
    /// Airy fringe scale Δx (m)
    pub delta_x: f64,
    /// Coherence kernel width σ_c (m)
    pub sigma_c: f64,
    /// Total blurring width σ_Λ (m)
    pub sigma_lambda: f64,
    /// p_c = σ_c/Δx
    pub p_c: f64,
    /// p_Λ = σ_Λ/Δx
    pub p_lambda: f64,
}

impl FringePattern {
    pub fn new(delta_x: f64, sigma_c: f64, sigma_lambda: f64) -> Result<Self> {
        if !(delta_x > 0.0) || !(sigma_c > 0.0) || sigma_lambda < 0.0 {
            return Err(Error::InvalidInput(format!(
                "pattern needs delta_x > 0, sigma_c > 0, sigma_lambda >= 0; \
                 got {delta_x}, {sigma_c}, {sigma_lambda}"
            )));
        }
        Ok(FringePattern {
            delta_x,
            sigma_c,
            sigma_lambda,
            p_c: sigma_c / delta_x,
            p_lambda: sigma_lambda / delta_x,
        })
    }

    /// Canonical pattern with Δx = 1 m, used for shape-space work.
    pub fn normalized(p_c: f64, p_lambda: f64) -> Result<Self> {
        Self::new(1.0, p_c, p_lambda)
    }

    /// Same shape with the blur replaced.
    pub fn with_sigma_lambda(&self, sigma_lambda: f64) -> Result<Self> {
        Self::new(self.delta_x, self.sigma_c, sigma_lambda)
    }
}

/// Grid requirements for capturing the pattern to a given tail mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRequirement {
    pub x_lo: f64,
    pub x_hi: f64,
    pub max_step: f64,
}

/// Span and step needed so that the density integrates to 1 − O(`tail_mass`)
/// and the convolutions are resolved.
pub fn required_grid(pattern: &FringePattern, tail_mass: f64) -> GridRequirement {
    let dx = pattern.delta_x;
    let kernel = 6.0 * std::f64::consts::SQRT_2 * pattern.sigma_c + 6.0 * pattern.sigma_lambda;
    let z = erfc_inv_approx(tail_mass.clamp(1e-12, 1.0));
    let deep = z * z / (2.0 * pattern.p_c * pattern.p_c) * dx;
    // never smaller than the window holding the first two fringes
    let x_lo = -(deep.max(10.0 * dx) + kernel);
    let x_hi = 4.0 * dx + kernel;
    GridRequirement { x_lo, x_hi, max_step: pattern.sigma_c.min(dx) / 20.0 }
}

fn validate_grid(pattern: &FringePattern, x_grid: &[f64], extra_lo: f64) -> Result<f64> {
    if x_grid.len() < 16 {
        return Err(Error::GridInsufficient("need at least 16 grid points".into()));
    }
    let h = x_grid[1] - x_grid[0];
    if !(h > 0.0) {
        return Err(Error::GridInsufficient("grid must be strictly increasing".into()));
    }
    for w in x_grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
            return Err(Error::GridInsufficient("grid must be uniform".into()));
        }
    }
    let dx = pattern.delta_x;
    let need_lo = -10.0 * dx - 6.0 * pattern.sigma_c - extra_lo;
    let need_hi = 4.0 * dx + 6.0 * pattern.sigma_c + extra_lo;
    let max_step = pattern.sigma_c.min(dx) / 20.0;
    if x_grid[0] > need_lo || x_grid[x_grid.len() - 1] < need_hi || h > max_step * (1.0 + 1e-9) {
        return Err(Error::GridInsufficient(format!(
            "pattern requires span [{:.4e}, {:.4e}] with step <= {:.4e}; \
             got [{:.4e}, {:.4e}] step {:.4e}",
            need_lo,
            need_hi,
            max_step,
            x_grid[0],
            x_grid[x_grid.len() - 1],
            h
        )));
    }
    Ok(h)
}

/// Airy amplitude convolved with the coherence kernel, sampled on a uniform
/// grid by trapezoid quadrature at the grid's own resolution.
fn amplitude_on_grid(pattern: &FringePattern, x0: f64, h: f64, n: usize) -> Vec<f64> {
    let dx = pattern.delta_x;
    let sc = pattern.sigma_c;
    let half_width = 6.0 * std::f64::consts::SQRT_2 * sc;
    let k_half = (half_width / h).ceil() as usize;
    let k_len = 2 * k_half + 1;
    // Gaussian kernel samples, trapezoid weights folded in (interior weight 1)
    let kernel: Vec<f64> = (0..k_len)
        .map(|j| {
            let u = (j as f64 - k_half as f64) * h;
            let w = if j == 0 || j == k_len - 1 { 0.5 } else { 1.0 };
            w * (-u * u / (4.0 * sc * sc)).exp()
        })
        .collect();
    // Airy samples on the extended grid
    let ai_vals: Vec<f64> = (0..n + k_len - 1)
        .map(|i| ai((x0 + (i as f64 - k_half as f64) * h) / dx))
        .collect();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, kj) in kernel.iter().enumerate() {
                // kernel index j corresponds to offset (j - k_half), and
                // ai_vals is shifted by k_half, so Ai(x_i - u_j) lines up at
                // i + (k_len - 1 - j)
                acc += kj * ai_vals[i + k_len - 1 - j];
            }
            acc * h
        })
        .collect()
}

fn unitary_norm(pattern: &FringePattern) -> f64 {
    1.0 / ((2.0 * PI).sqrt() * pattern.delta_x * pattern.delta_x * pattern.sigma_c)
}

/// Unitary position density on the caller's uniform grid (σ_Λ is ignored;
/// use [`decohered_pdf`] for the blurred pattern). Values carry the analytic
/// normalization, so they integrate to 1 over the full line.
pub fn unitary_pdf(pattern: &FringePattern, x_grid: &[f64]) -> Result<Vec<f64>> {
    let h = validate_grid(pattern, x_grid, 0.0)?;
    let norm = unitary_norm(pattern);
    let c = amplitude_on_grid(pattern, x_grid[0], h, x_grid.len());
    Ok(c.into_iter().map(|v| v * v * norm).collect())
}

/// Decohered position density P_D = P ∗ N(0, σ_Λ²) on the caller's grid.
/// With σ_Λ = 0 this is exactly `unitary_pdf` on the same grid.
pub fn decohered_pdf(pattern: &FringePattern, x_grid: &[f64]) -> Result<Vec<f64>> {
    let h = validate_grid(pattern, x_grid, 6.0 * pattern.sigma_lambda)?;
    if pattern.sigma_lambda == 0.0 {
        return unitary_pdf(pattern, x_grid);
    }
    let norm = unitary_norm(pattern);
    let sl = pattern.sigma_lambda;
    let b_half = (6.0 * sl / h).ceil() as usize;
    // extended unitary density covering the blur kernel reach
    let n_ext = x_grid.len() + 2 * b_half;
    let x0_ext = x_grid[0] - b_half as f64 * h;
    let c = amplitude_on_grid(pattern, x0_ext, h, n_ext);
    let p_ext: Vec<f64> = c.into_iter().map(|v| v * v * norm).collect();
    // discretely normalized Gaussian kernel: preserves total mass exactly
    let mut kernel: Vec<f64> =
        (0..2 * b_half + 1).map(|j| gauss(((j as f64) - b_half as f64) * h, sl)).collect();
    let ksum: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= ksum;
    }
    Ok((0..x_grid.len())
        .map(|i| {
            let mut acc = 0.0;
            for (j, kj) in kernel.iter().enumerate() {
                acc += kj * p_ext[i + 2 * b_half - j];
            }
            acc
        })
        .collect())
}

fn gauss(u: f64, sigma: f64) -> f64 {
    (-u * u / (2.0 * sigma * sigma)).exp()
}

/// Positions of the two tallest maxima and the two minima flanking the
/// second fringe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremaPositions {
    pub x_max1: f64,
    pub x_max2: f64,
    pub x_min1: f64,
    pub x_min2: f64,
}

/// Cached pointwise evaluator for one pattern: the unitary density is
/// precomputed on a fine window around the fringe region, the blur is applied
/// on top, and extrema/integrals are refined from the cache. Construction
/// cost is a few thousand Airy evaluations; queries are interpolation.
pub struct PatternEval {
    pub pattern: FringePattern,
    x0: f64,
    h: f64,
    p_unitary: Vec<f64>,
    p_decohered: Vec<f64>,
    /// window inside which queries are valid
    pub window: (f64, f64),
}

impl PatternEval {
    pub fn new(pattern: &FringePattern) -> Result<Self> {
        let dx = pattern.delta_x;
        let sc = pattern.sigma_c;
        let sl = pattern.sigma_lambda;
        let shift = sc.powi(4) / dx.powi(3);
        // valid query window: all four extrema seeds with refinement margin
        // plus the positive-side tail
        let vlo = -4.55 * dx - shift;
        let vhi = 3.0 * dx + 6.0 * std::f64::consts::SQRT_2 * sc;
        // cache extends beyond it by the full blur reach
        let clo = vlo - 6.5 * sl;
        let chi = vhi + 6.5 * sl;
        let h = (std::f64::consts::SQRT_2 * sc).min(0.25 * dx) / 20.0;
        let n = ((chi - clo) / h).ceil() as usize + 1;
        if n > 6_000_000 {
            return Err(Error::GridInsufficient(format!(
                "pattern evaluator window needs {n} points; shape parameters out of range \
                 (p_c = {:.3e}, p_lambda = {:.3e})",
                pattern.p_c, pattern.p_lambda
            )));
        }
        let norm = unitary_norm(pattern);
        let c = amplitude_on_grid(pattern, clo, h, n);
        let p_unitary: Vec<f64> = c.into_iter().map(|v| v * v * norm).collect();
        let p_decohered = if sl == 0.0 {
            p_unitary.clone()
        } else if sl >= 2.0 * h {
            // discrete Gaussian convolution; sampling error ~ e^{-2 pi^2 (sl/h)^2}
            let b_half = (6.0 * sl / h).ceil() as usize;
            let mut kernel: Vec<f64> =
                (0..2 * b_half + 1).map(|j| gauss(((j as f64) - b_half as f64) * h, sl)).collect();
            let ksum: f64 = kernel.iter().sum();
            for k in kernel.iter_mut() {
                *k /= ksum;
            }
            (0..n)
                .map(|i| {
                    let mut acc = 0.0;
                    for (j, kj) in kernel.iter().enumerate() {
                        // P index i + b_half - j, clamped into the cache; the
                        // clamp only fires inside the padding margins
                        let idx = (i + b_half).saturating_sub(j).min(n - 1);
                        acc += kj * p_unitary[idx];
                    }
                    acc
                })
                .collect()
        } else {
            // blur narrower than the cache step: quadrature over the kernel
            // with interpolated unitary density
            let rule = GlRule::new(12);
            let interp = |x: f64| interp_cubic(&p_unitary, clo, h, x);
            (0..n)
                .map(|i| {
                    let x = clo + i as f64 * h;
                    let mut acc = 0.0;
                    for p in 0..4 {
                        let a = -6.0 * sl + 3.0 * sl * p as f64;
                        acc += rule.integrate(x + a, x + a + 3.0 * sl, |y| {
                            interp(y) * gauss(x - y, sl)
                        });
                    }
                    acc / ((2.0 * PI).sqrt() * sl)
                })
                .collect()
        };
        Ok(PatternEval {
            pattern: *pattern,
            x0: clo,
            h,
            p_unitary,
            p_decohered,
            window: (vlo, vhi),
        })
    }

    pub fn unitary_at(&self, x: f64) -> f64 {
        interp_cubic(&self.p_unitary, self.x0, self.h, x)
    }

    pub fn decohered_at(&self, x: f64) -> f64 {
        interp_cubic(&self.p_decohered, self.x0, self.h, x)
    }

    /// ∫ P_D over [a, b] by composite Gauss–Legendre on the cache.
    pub fn decohered_mass(&self, a: f64, b: f64) -> f64 {
        let rule = GlRule::new(16);
        let panels = (((b - a) / self.pattern.delta_x).abs() * 8.0).ceil().max(4.0) as usize;
        rule.integrate_panels(a, b, panels, |x| self.decohered_at(x))
    }

    /// Golden-section refinement of the four seed extrema on the decohered
    /// density. Fails with `NoFringes` when the first minimum has washed out.
    pub fn refine_extrema(&self) -> Result<ExtremaPositions> {
        if self.pattern.p_c >= 1.0 {
            return Err(Error::NoFringes(format!(
                "p_c = {:.3} >= 1: coherence kernel wider than the fringe spacing",
                self.pattern.p_c
            )));
        }
        let dx = self.pattern.delta_x;
        let shift = self.pattern.sigma_c.powi(4) / dx.powi(3);
        let seed = |c: f64| c * dx - shift;
        let window = 0.3 * dx;
        let refine_min = |s: f64| {
            golden_section_min(|x| self.decohered_at(x), s - window, s + window, 1e-6 * dx)
        };
        let refine_max = |s: f64| {
            let (x, negv) =
                golden_section_min(|x| -self.decohered_at(x), s - window, s + window, 1e-6 * dx);
            (x, -negv)
        };
        let (x_max1, f_max1) = refine_max(seed(AI_PRIME_ZEROS[0]));
        let (x_max2, f_max2) = refine_max(seed(AI_PRIME_ZEROS[1]));
        let (x_min1, f_min1) = refine_min(seed(AI_ZEROS[0]));
        let (x_min2, f_min2) = refine_min(seed(AI_ZEROS[1]));
        // a washed-out pattern has no interior dip: the "minimum" lands on a
        // window edge or fails to sit below both neighbouring maxima
        let edge = 2e-6 * dx;
        let interior = (x_min1 - (seed(AI_ZEROS[0]) - window)).abs() > edge
            && (x_min1 - (seed(AI_ZEROS[0]) + window)).abs() > edge;
        if !interior || f_min1 >= f_max1 || f_min1 >= f_max2 || f_min2 >= f_max2 {
            return Err(Error::NoFringes(format!(
                "no resolvable minimum (p_c = {:.3}, p_lambda = {:.3})",
                self.pattern.p_c, self.pattern.p_lambda
            )));
        }
        Ok(ExtremaPositions { x_max1, x_max2, x_min1, x_min2 })
    }
}

/// Four-point Lagrange interpolation on a uniform grid, clamped at the edges.
fn interp_cubic(vals: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let t = (x - x0) / h;
    let n = vals.len();
    let i = (t.floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = t - i as f64;
    let (a, b, c, d) = (vals[i - 1], vals[i], vals[i + 1], vals[i + 2]);
    // Lagrange basis on offsets {-1, 0, 1, 2}
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    a * w0 + b * w1 + c * w2 + d * w3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::trapezoid_uniform;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn grid_for(pattern: &FringePattern, tail: f64) -> Vec<f64> {
        let req = required_grid(pattern, tail);
        let n = ((req.x_hi - req.x_lo) / req.max_step).ceil() as usize + 1;
        let h = (req.x_hi - req.x_lo) / (n - 1) as f64;
        (0..n).map(|i| req.x_lo + i as f64 * h).collect()
    }

    #[test]
    fn unitary_normalizes_case_study_shape() {
        // case-study shape parameters, unit fringe scale
        let pat = FringePattern::normalized(0.145, 0.0).unwrap();
        let grid = grid_for(&pat, 2e-4);
        let pdf = unitary_pdf(&pat, &grid).unwrap();
        let total = trapezoid_uniform(&pdf, grid[1] - grid[0]);
        assert!((total - 1.0).abs() < 1e-3, "integral = {total}");
        assert!(pdf.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn decohered_equals_unitary_at_zero_blur() {
        let pat = FringePattern::normalized(0.3, 0.0).unwrap();
        let grid = grid_for(&pat, 1e-3);
        let a = unitary_pdf(&pat, &grid).unwrap();
        let b = decohered_pdf(&pat, &grid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decohered_preserves_mass_and_mean_shifts_variance() {
        let pat = FringePattern::normalized(0.35, 0.45).unwrap();
        let grid = grid_for(&pat, 1e-6);
        let h = grid[1] - grid[0];
        let pu = unitary_pdf(&pat, &grid).unwrap();
        let pd = decohered_pdf(&pat, &grid).unwrap();
        let mass_u = trapezoid_uniform(&pu, h);
        let mass_d = trapezoid_uniform(&pd, h);
        assert!((mass_u - 1.0).abs() < 2e-4);
        assert!((mass_d - mass_u).abs() < 1e-6);
        let moment = |p: &[f64], k: i32| {
            let v: Vec<f64> =
                p.iter().zip(&grid).map(|(pi, xi)| pi * xi.powi(k)).collect();
            trapezoid_uniform(&v, h)
        };
        let mean_u = moment(&pu, 1);
        let mean_d = moment(&pd, 1);
        // convolution with a symmetric kernel preserves the mean
        assert!((mean_u - mean_d).abs() < 1e-4 * mean_u.abs());
        let var_u = moment(&pu, 2) - mean_u * mean_u;
        let var_d = moment(&pd, 2) - mean_d * mean_d;
        assert!(
            rel(var_d - var_u, pat.sigma_lambda * pat.sigma_lambda) < 1e-3,
            "variance excess = {:.6e}, want {:.6e}",
            var_d - var_u,
            pat.sigma_lambda * pat.sigma_lambda
        );
    }

    #[test]
    fn grid_too_short_is_rejected_with_bounds() {
        let pat = FringePattern::normalized(0.145, 0.0).unwrap();
        let grid: Vec<f64> = (0..200).map(|i| -2.0 + i as f64 * 0.02).collect();
        match unitary_pdf(&pat, &grid) {
            Err(Error::GridInsufficient(msg)) => {
                assert!(msg.contains("requires span"), "message: {msg}");
            }
            other => panic!("expected GridInsufficient, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn delta_kernel_limit_approaches_squared_airy() {
        // sigma_c/dx -> 0: P(x) -> 2 sqrt(2 pi) sigma_c Ai²(x/dx) / dx²
        let pat = FringePattern::normalized(0.004, 0.0).unwrap();
        let ev = PatternEval::new(&pat).unwrap();
        for x in [-3.7, -2.8, -1.0, -0.4, 0.5] {
            let expect = 2.0 * (2.0 * PI).sqrt() * pat.sigma_c * ai(x) * ai(x);
            let got = ev.unitary_at(x);
            assert!(rel(got, expect) < 2e-3, "x = {x}: {got:.6e} vs {expect:.6e}");
        }
    }

    #[test]
    fn eval_matches_grid_pdf() {
        let pat = FringePattern::normalized(0.2, 0.3).unwrap();
        let ev = PatternEval::new(&pat).unwrap();
        let grid = grid_for(&pat, 1e-4);
        let pd = decohered_pdf(&pat, &grid).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            if x < ev.window.0 || x > ev.window.1 {
                continue;
            }
            assert!(
                (pd[i] - ev.decohered_at(x)).abs() < 3e-4 * pd.iter().cloned().fold(0.0, f64::max),
                "mismatch at x = {x}: grid {} vs eval {}",
                pd[i],
                ev.decohered_at(x)
            );
        }
    }

    #[test]
    fn extrema_converge_to_airy_zeros_without_blur() {
        let pat = FringePattern::normalized(0.02, 0.0).unwrap();
        let ev = PatternEval::new(&pat).unwrap();
        let ext = ev.refine_extrema().unwrap();
        assert!((ext.x_min1 - AI_ZEROS[0]).abs() < 1e-3);
        assert!((ext.x_min2 - AI_ZEROS[1]).abs() < 1e-3);
        // separation of the two minima approaches 1.75 dx
        assert!(((ext.x_min1 - ext.x_min2) - 1.75).abs() < 5e-3);
        assert!((ext.x_max2 - AI_PRIME_ZEROS[1]).abs() < 1e-3);
    }

    #[test]
    fn washed_out_pattern_reports_no_fringes() {
        let pat = FringePattern::normalized(0.25, 2.5).unwrap();
        let ev = PatternEval::new(&pat).unwrap();
        match ev.refine_extrema() {
            Err(Error::NoFringes(_)) => {}
            other => panic!("expected NoFringes, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn refinement_self_consistency_on_doubled_grid() {
        // the dedicated evaluator and a doubled-resolution grid convolution
        // agree pointwise
        let pat = FringePattern::normalized(0.145, 0.486).unwrap();
        let req = required_grid(&pat, 1e-4);
        let h = req.max_step / 2.0;
        let n = ((req.x_hi - req.x_lo) / h).ceil() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|i| req.x_lo + i as f64 * h).collect();
        let pd = decohered_pdf(&pat, &grid).unwrap();
        let ev = PatternEval::new(&pat).unwrap();
        let peak = pd.iter().cloned().fold(0.0, f64::max);
        for (i, &x) in grid.iter().enumerate().step_by(37) {
            if x < ev.window.0 || x > ev.window.1 {
                continue;
            }
            assert!(
                (pd[i] - ev.decohered_at(x)).abs() < 1e-4 * peak,
                "x = {x}: {} vs {}",
                pd[i],
                ev.decohered_at(x)
            );
        }
    }
}
