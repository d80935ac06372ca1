//! Dormand–Prince 5(4) with PI step-size control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Mixed absolute/relative tolerance per component.
    pub tol: f64,
    pub max_steps: usize,
    pub h_min: f64,
    /// Trajectories with `max |z|` above this radius are reported as escaped.
    pub escape_radius: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_steps: 200_000,
            h_min: 1e-12,
            escape_radius: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
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
// Difference between the 5th and embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1`. `guard` receives `y` after each accepted step
/// and returns false when the state left its domain.
pub fn integrate(
    mut f: impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: &IntegratorOptions,
    mut guard: impl FnMut(&[f64]) -> bool,
) -> Result<(Vec<f64>, StepStats)> {
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut stats = StepStats::default();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y, stats));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut err_prev: f64 = 1e-4;
    f(t, &y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = initial_step(&y, &k[0], span.abs(), opts.tol) * dir;
    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            let (_, tail) = k.split_at_mut(s);
            f(t + C[s] * h, &tmp, &mut tail[0]);
        }
        stats.evaluations += 6;
        // Stage 7 is evaluated at the 5th-order solution (FSAL), which is `tmp`.
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let e: f64 = h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>();
            let scale = opts.tol * (1.0 + y[i].abs().max(tmp[i].abs()));
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            return Err(Error::NonFinite(format!("integration at t = {t}")));
        }
        if err <= 1.0 {
            y.copy_from_slice(&tmp);
            t = if last { t1 } else { t + h };
            stats.accepted += 1;
            if !guard(&y) {
                return Err(Error::Domain { t });
            }
            if last {
                return Ok((y, stats));
            }
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            let factor = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h *= factor.clamp(0.2, 5.0);
            err_prev = err.max(1e-4);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h.abs() < opts.h_min * span.abs() {
            return Err(Error::StepUnderflow { t, h });
        }
    }
}

fn initial_step(y: &[f64], f0: &[f64], span: f64, tol: f64) -> f64 {
    let ny = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nf = f0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = if nf > 0.0 {
        0.01 * (1.0 + ny) / nf
    } else {
        0.01 * span
    };
    (h * tol.powf(0.2) * 50.0).min(span).max(1e-6 * span)
}
