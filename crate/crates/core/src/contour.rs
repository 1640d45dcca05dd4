//! Shape-space quality contour: the set of (p_c, p_Λ) pairs whose
//! interference pattern has a fixed quality q = v²·p_r. Writing the
//! decohered density in units of Δx leaves exactly these two parameters, so
//! one contour serves every particle size and protocol time.

use crate::error::{Error, Result};
use crate::metrics::pattern_metrics;
use crate::pattern::{FringePattern, PatternEval};
use rayon::prelude::*;
use serde::Serialize;

/// Quality of the normalized pattern with shape parameters (p_c, p_Λ).
/// Washed-out shapes have quality 0.
pub fn quality_at(p_c: f64, p_lambda: f64) -> Result<f64> {
    let pat = FringePattern::normalized(p_c, p_lambda)?;
    let ev = PatternEval::new(&pat)?;
    Ok(pattern_metrics(&ev, 5.0).quality)
}

/// One contour point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSample {
    pub p_c: f64,
    pub p_lambda: f64,
}

/// A solved iso-quality contour p_Λ^{(q)}[p_c].
#[derive(Debug, Clone, Serialize)]
pub struct QualityContour {
    pub q_target: f64,
    /// Feasible samples, ascending in p_c
    pub samples: Vec<ContourSample>,
    /// p_c values with no solution, with the reason
    pub skipped: Vec<(f64, String)>,
}

impl QualityContour {
    /// Interpolate p_Λ at `p_c` (linear between samples). None outside the
    /// feasible band.
    pub fn p_lambda_at(&self, p_c: f64) -> Option<f64> {
        let s = &self.samples;
        if s.len() < 2 || p_c < s[0].p_c || p_c > s[s.len() - 1].p_c {
            return None;
        }
        let idx = s.partition_point(|e| e.p_c <= p_c).min(s.len() - 1).max(1);
        let (a, b) = (&s[idx - 1], &s[idx]);
        let w = (p_c - a.p_c) / (b.p_c - a.p_c);
        Some(a.p_lambda + w * (b.p_lambda - a.p_lambda))
    }

    pub fn feasible_band(&self) -> Option<(f64, f64)> {
        if self.samples.is_empty() {
            None
        } else {
            Some((self.samples[0].p_c, self.samples[self.samples.len() - 1].p_c))
        }
    }
}

/// Solve q(p_c, p_Λ) = q_target for p_Λ at fixed p_c by bisection on the
/// monotone-decreasing q(p_Λ). Returns Ok(None) when the shape cannot reach
/// the target even unblurred.
pub fn solve_p_lambda(q_target: f64, p_c: f64) -> Result<Option<f64>> {
    if !(q_target > 0.0) {
        return Err(Error::InvalidInput(format!("q_target must be > 0, got {q_target}")));
    }
    let q0 = quality_at(p_c, 0.0)?;
    if q0 <= q_target {
        return Ok(None);
    }
    // bracket: double until washed out below target
    let mut lo = 0.0;
    let mut hi = 0.2;
    let mut q_hi = quality_at(p_c, hi)?;
    let mut guard = 0;
    while q_hi > q_target {
        lo = hi;
        hi *= 2.0;
        q_hi = quality_at(p_c, hi)?;
        guard += 1;
        if guard > 12 {
            return Err(Error::QuadratureFailure(format!(
                "could not bracket the quality contour at p_c = {p_c}"
            )));
        }
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if quality_at(p_c, mid)? > q_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-5 * hi.max(1e-3) {
            break;
        }
    }
    let p_lambda = 0.5 * (lo + hi);
    // defining property, recomputed
    let q = quality_at(p_c, p_lambda)?;
    if (q - q_target).abs() > 2e-3 * q_target {
        return Err(Error::QuadratureFailure(format!(
            "contour solve at p_c = {p_c} landed at q = {q:.5e}, target {q_target:.5e}"
        )));
    }
    Ok(Some(p_lambda))
}

/// Solve the contour on a p_c grid. Grid points are independent and run in
/// parallel; the output order follows the input grid, so results are
/// deterministic.
pub fn quality_contour(q_target: f64, p_c_grid: &[f64]) -> Result<QualityContour> {
    let solved: Vec<(f64, Result<Option<f64>>)> = p_c_grid
        .par_iter()
        .map(|&p_c| (p_c, solve_p_lambda(q_target, p_c)))
        .collect();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (p_c, r) in solved {
        match r {
            Ok(Some(p_lambda)) => samples.push(ContourSample { p_c, p_lambda }),
            Ok(None) => skipped.push((
                p_c,
                "unblurred quality already below target (fringes washed out by sigma_c)".into(),
            )),
            Err(e) => skipped.push((p_c, e.to_string())),
        }
    }
    // single-valuedness along the band: p_c strictly increasing by
    // construction; reject accidental non-contiguous bands
    if samples.len() >= 2 {
        let lo = samples[0].p_c;
        let hi = samples[samples.len() - 1].p_c;
        for (p_c, _) in &skipped {
            if *p_c > lo && *p_c < hi {
                return Err(Error::Infeasible(format!(
                    "contour band is not contiguous: hole at p_c = {p_c}"
                )));
            }
        }
    }
    Ok(QualityContour { q_target, samples, skipped })
}

/// Default p_c grid for contour work: geometric spacing over the band where
/// fringe patterns can resolve.
pub fn default_p_c_grid(n: usize) -> Vec<f64> {
    let (lo, hi) = (0.03_f64, 0.75_f64);
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}
