//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 5(4)) for the
//! small fixed-size systems in this crate: the internal-temperature equation
//! and the second-moment flow of the localization master equation.

/// Integrate dy/dt = f(t, y) from t0 to t1 with adaptive step control.
/// Returns the state at t1.
pub fn integrate_adaptive<const N: usize, F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    rel_tol: f64,
    abs_tol: f64,
) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if t1 <= t0 {
        return y0;
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = (t1 - t0) / 64.0;
    let h_min = (t1 - t0) * 1e-14;

    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let (y5, err) = dopri_step(&f, t, &y, h);
        // scaled error norm
        let mut norm: f64 = 0.0;
        for i in 0..N {
            let scale = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
            norm = norm.max((err[i] / scale).abs());
        }
        if norm <= 1.0 || h <= h_min {
            t += h;
            y = y5;
        }
        let factor = if norm > 0.0 {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h * factor).max(h_min);
    }
    y
}

/// One Dormand–Prince 5(4) step; returns (5th-order solution, error estimate).
fn dopri_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut k: [[f64; N]; 7] = [[0.0; N]; 7];
    k[0] = f(t, y);
    for s in 1..7 {
        let mut ys = *y;
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += A[s][j] * kj[i];
            }
            ys[i] += h * acc;
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut y4 = *y;
    for i in 0..N {
        let mut acc5 = 0.0;
        let mut acc4 = 0.0;
        for (s, ks) in k.iter().enumerate() {
            acc5 += B5[s] * ks[i];
            acc4 += B4[s] * ks[i];
        }
        y5[i] += h * acc5;
        y4[i] += h * acc4;
    }
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = y5[i] - y4[i];
    }
    (y5, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate_adaptive(|_, y: &[f64; 1]| [-2.0 * y[0]], 0.0, 3.0, [1.0], 1e-10, 1e-14);
        assert!((y[0] - (-6.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let w = 3.0;
        let y = integrate_adaptive(
            |_, y: &[f64; 2]| [y[1], -w * w * y[0]],
            0.0,
            20.0,
            [1.0, 0.0],
            1e-11,
            1e-14,
        );
        let e = y[1] * y[1] + w * w * y[0] * y[0];
        assert!((e - w * w).abs() < 1e-6, "energy drift {e}");
    }

    #[test]
    fn quadrature_polynomial_exact() {
        // dy/dt = 3t² integrates to t³ with no error at any tolerance
        let y = integrate_adaptive(|t, _: &[f64; 1]| [3.0 * t * t], 0.0, 2.0, [0.0], 1e-8, 1e-12);
        assert!((y[0] - 8.0).abs() < 1e-8);
    }
}
