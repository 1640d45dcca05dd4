//! Small quadrature toolbox: Gauss–Legendre rules, composite integration with
//! convergence control, and the uniform-grid trapezoid rule used by the
//! pattern convolutions.

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1],
/// computed by Newton iteration on P_n (no tables).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Reusable Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct GlRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GlRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        GlRule { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_a^b f on one panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }

    /// Composite rule over `panels` equal panels.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for i in 0..panels {
            acc += self.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f);
        }
        acc
    }
}

/// Composite Gauss–Legendre with panel doubling until two refinements agree
/// to `rel_tol` (relative to the integral scale plus `abs_floor`).
pub fn integrate_to_tol<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64> {
    let rule = GlRule::new(16);
    let mut panels = 4;
    let mut prev = rule.integrate_panels(a, b, panels, &mut f);
    for _ in 0..12 {
        panels *= 2;
        let cur = rule.integrate_panels(a, b, panels, &mut f);
        let scale = cur.abs().max(abs_floor);
        if (cur - prev).abs() <= rel_tol * scale {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure(format!(
        "integral on [{a}, {b}] did not settle to rel_tol {rel_tol}; last change {:.3e}",
        prev
    )))
}

/// Trapezoid rule over uniformly spaced samples with spacing `dx`.
pub fn trapezoid_uniform(samples: &[f64], dx: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let inner: f64 = samples[1..samples.len() - 1].iter().sum();
    dx * (0.5 * (samples[0] + samples[samples.len() - 1]) + inner)
}

/// Complementary error function (Abramowitz & Stegun 7.1.26 rational fit,
/// |error| < 1.5e−7). Used only to size pattern grids from tail-mass targets.
pub fn erfc_approx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc_approx(-x);
    }
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

/// Inverse of `erfc_approx` on (0, 1], by bisection.
pub fn erfc_inv_approx(y: f64) -> f64 {
    assert!(y > 0.0 && y <= 1.0);
    let (mut lo, mut hi) = (0.0, 30.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if erfc_approx(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimizer on [a, b]; returns (x_min, f_min).
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    x_tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > x_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    if fc < fm && fc < fd {
        (c, fc)
    } else if fd < fm {
        (d, fd)
    } else {
        (xm, fm)
    }
}

/// Bisection root finder for a continuous f with f(a)·f(b) ≤ 0.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, x_tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidInput(format!(
            "bisect: no sign change on [{a}, {b}] (f(a)={fa:.3e}, f(b)={fb:.3e})"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= x_tol {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
