use crate::fourier::{GridField, GridSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Non-autonomous Hamiltonian `H(z, φ)` on `R^{2n} × T^ℓ` with the standard symplectic form.
///
/// Phase coordinates are ordered `z = (q_1..q_n, p_1..p_n)`; external phases advance as
/// `φ(t) = φ₀ + α̂ t`. Tensors are row-major; `third` is indexed `[i][j][k]`.
pub trait Hamiltonian: Sync {
    fn half_dim(&self) -> usize;
    fn alpha_hat(&self) -> &[f64];
    fn energy(&self, z: &[f64], phi: &[f64]) -> f64;
    fn gradient(&self, z: &[f64], phi: &[f64], out: &mut [f64]);
    fn hessian(&self, z: &[f64], phi: &[f64], out: &mut [f64]);
    fn third(&self, z: &[f64], phi: &[f64], out: &mut [f64]);

    fn phase_dim(&self) -> usize {
        2 * self.half_dim()
    }

    /// `X = Ω₀^{-1} ∇H`, i.e. `q' = ∂_p H`, `p' = −∂_q H`.
    fn field(&self, z: &[f64], phi: &[f64], out: &mut [f64]) {
        let n = self.half_dim();
        let mut g = vec![0.0; 2 * n];
        self.gradient(z, phi, &mut g);
        for i in 0..n {
            out[i] = g[n + i];
            out[n + i] = -g[i];
        }
    }

    /// `D_z X`.
    fn jacobian(&self, z: &[f64], phi: &[f64], out: &mut [f64]) {
        let n = self.half_dim();
        let m = 2 * n;
        let mut h = vec![0.0; m * m];
        self.hessian(z, phi, &mut h);
        for i in 0..n {
            for c in 0..m {
                out[i * m + c] = h[(n + i) * m + c];
                out[(n + i) * m + c] = -h[i * m + c];
            }
        }
    }

    /// `D_z^2 X`, indexed `[i][a][b]`.
    fn field_hessian(&self, z: &[f64], phi: &[f64], out: &mut [f64]) {
        let n = self.half_dim();
        let m = 2 * n;
        let mut t = vec![0.0; m * m * m];
        self.third(z, phi, &mut t);
        let mm = m * m;
        for i in 0..n {
            out[i * mm..(i + 1) * mm].copy_from_slice(&t[(n + i) * mm..(n + i + 1) * mm]);
            for (o, v) in out[(n + i) * mm..(n + i + 1) * mm]
                .iter_mut()
                .zip(&t[i * mm..(i + 1) * mm])
            {
                *o = -v;
            }
        }
    }
}

/// `H = qp` on `R^2`, no external phases. Its time-`t` map is `(q e^t, p e^{-t})`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlainSaddle;

impl Hamiltonian for PlainSaddle {
    fn half_dim(&self) -> usize {
        1
    }
    fn alpha_hat(&self) -> &[f64] {
        &[]
    }
    fn energy(&self, z: &[f64], _: &[f64]) -> f64 {
        z[0] * z[1]
    }
    fn gradient(&self, z: &[f64], _: &[f64], out: &mut [f64]) {
        out[0] = z[1];
        out[1] = z[0];
    }
    fn hessian(&self, _: &[f64], _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[0.0, 1.0, 1.0, 0.0]);
    }
    fn third(&self, _: &[f64], _: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// One trigonometric mode `c cos(2πkφ) + s sin(2πkφ)` of the forcing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingMode {
    pub k: i64,
    pub cos: f64,
    pub sin: f64,
}

/// Rotators `ω_i I_i + c_i I_i^2` (with `I_i = (q_i^2 + p_i^2)/2`) coupled to a forced saddle
/// `μ q_s p_s + ε g(φ) q_s`, one external phase.
///
/// The first `d` rotators carry the internal angles of the torus; the last rotator carries the
/// flow direction and fixes the return time. Both named benchmarks are instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotatorSaddle {
    pub freqs: Vec<f64>,
    pub twists: Vec<f64>,
    pub radii: Vec<f64>,
    pub mu: f64,
    pub eps: f64,
    pub alpha_hat: Vec<f64>,
    pub forcing: Vec<ForcingMode>,
}

impl RotatorSaddle {
    /// `μ q_2 p_2 + ω_1 (q_1^2 + p_1^2)/2 + ε g(φ) q_2`: linear, `n = 2`, `d = 0`, `ℓ = 1`.
    pub fn linear_saddle_forced(omega1: f64, mu: f64, eps: f64, radius: f64, alpha: f64) -> Self {
        let period = 2.0 * PI / omega1;
        Self {
            freqs: vec![omega1],
            twists: vec![0.0],
            radii: vec![radius],
            mu,
            eps,
            alpha_hat: vec![alpha / period],
            forcing: default_forcing(),
        }
    }

    /// Two twisting rotators and a forced saddle: `n = 3`, `d = 1`, `ℓ = 1`.
    /// Linear frequencies are chosen so the torus at `radii` has rotation `(omega, alpha)`
    /// with the flow-direction rotator at unit angular frequency.
    pub fn twisted_saddle(omega: f64, alpha: f64, twists: [f64; 2], mu: f64, eps: f64) -> Self {
        let radii = vec![1.0, 1.0];
        let nu_flow = 1.0;
        let actions: Vec<f64> = radii.iter().map(|r| r * r / 2.0).collect();
        let nu = [nu_flow * omega, nu_flow];
        let freqs = vec![
            nu[0] - 2.0 * twists[0] * actions[0],
            nu[1] - 2.0 * twists[1] * actions[1],
        ];
        let period = 2.0 * PI / nu_flow;
        Self {
            freqs,
            twists: twists.to_vec(),
            radii,
            mu,
            eps,
            alpha_hat: vec![alpha / period],
            forcing: default_forcing(),
        }
    }

    pub fn rotators(&self) -> usize {
        self.freqs.len()
    }

    pub fn d(&self) -> usize {
        self.rotators() - 1
    }

    fn saddle(&self) -> usize {
        self.rotators()
    }

    /// Angular frequencies `ν_i = ω_i + 2 c_i I_i` on the target torus.
    pub fn angular_frequencies(&self) -> Vec<f64> {
        (0..self.rotators())
            .map(|i| self.freqs[i] + self.twists[i] * self.radii[i] * self.radii[i])
            .collect()
    }

    /// Return time of the flow-direction rotator.
    pub fn period(&self) -> f64 {
        2.0 * PI / *self.angular_frequencies().last().unwrap()
    }

    /// Internal rotation `ω ∈ T^d` of the exact torus.
    pub fn omega(&self) -> Vec<f64> {
        let nu = self.angular_frequencies();
        let last = *nu.last().unwrap();
        nu[..self.d()]
            .iter()
            .map(|v| (v / last).rem_euclid(1.0))
            .collect()
    }

    /// External rotation `α = α̂ T`.
    pub fn alpha(&self) -> Vec<f64> {
        self.alpha_hat.iter().map(|a| a * self.period()).collect()
    }

    pub fn lambda(&self) -> f64 {
        (-self.mu * self.period()).exp()
    }

    fn forcing_value(&self, phi: f64) -> f64 {
        self.forcing
            .iter()
            .map(|m| {
                let a = 2.0 * PI * m.k as f64 * phi;
                m.cos * a.cos() + m.sin * a.sin()
            })
            .sum()
    }

    /// Stable coordinate of the hyperbolic loop: the quasi-periodic solution of
    /// `α̂ P' = −μ P − ε g`.
    pub fn loop_momentum(&self, phi: f64) -> f64 {
        let ah = self.alpha_hat[0];
        self.forcing
            .iter()
            .map(|m| {
                let g = num_complex::Complex64::new(m.cos, -m.sin);
                let q = -self.eps * g
                    / num_complex::Complex64::new(self.mu, 2.0 * PI * m.k as f64 * ah);
                (q * num_complex::Complex64::from_polar(1.0, 2.0 * PI * m.k as f64 * phi)).re
            })
            .sum()
    }

    /// Exact torus embedding sampled on `grid` (axes `θ_1..θ_d, φ`).
    pub fn exact_torus(&self, grid: &GridSpec) -> GridField {
        let n = self.half_dim();
        let d = self.d();
        let s = self.saddle();
        GridField::from_fn(grid, 2 * n, 1, |x, out| {
            for i in 0..self.rotators() {
                let angle = if i < d { 2.0 * PI * x[i] } else { 0.0 };
                out[i] = self.radii[i] * angle.cos();
                out[n + i] = -self.radii[i] * angle.sin();
            }
            out[s] = 0.0;
            out[n + s] = self.loop_momentum(x[d]);
        })
    }

    /// Stable bundle of the exact torus: the constant `e_{p_s}`.
    pub fn exact_bundle(&self, grid: &GridSpec) -> GridField {
        let n = self.half_dim();
        let mut v = vec![0.0; 2 * n];
        v[n + self.saddle()] = 1.0;
        GridField::constant(grid, 2 * n, 1, &v)
    }

    /// Unstable bundle of the exact torus: the constant `e_{q_s}`.
    pub fn exact_unstable_bundle(&self, grid: &GridSpec) -> GridField {
        let n = self.half_dim();
        let mut v = vec![0.0; 2 * n];
        v[self.saddle()] = 1.0;
        GridField::constant(grid, 2 * n, 1, &v)
    }
}

fn default_forcing() -> Vec<ForcingMode> {
    vec![
        ForcingMode {
            k: 1,
            cos: 1.0,
            sin: 0.0,
        },
        ForcingMode {
            k: 2,
            cos: 0.0,
            sin: 0.5,
        },
    ]
}

impl Hamiltonian for RotatorSaddle {
    fn half_dim(&self) -> usize {
        self.rotators() + 1
    }

    fn alpha_hat(&self) -> &[f64] {
        &self.alpha_hat
    }

    fn energy(&self, z: &[f64], phi: &[f64]) -> f64 {
        let n = self.half_dim();
        let s = self.saddle();
        let mut h = 0.0;
        for i in 0..self.rotators() {
            let act = 0.5 * (z[i] * z[i] + z[n + i] * z[n + i]);
            h += self.freqs[i] * act + self.twists[i] * act * act;
        }
        h + self.mu * z[s] * z[n + s] + self.eps * self.forcing_value(phi[0]) * z[s]
    }

    fn gradient(&self, z: &[f64], phi: &[f64], out: &mut [f64]) {
        let n = self.half_dim();
        let s = self.saddle();
        for i in 0..self.rotators() {
            let act = 0.5 * (z[i] * z[i] + z[n + i] * z[n + i]);
            let nu = self.freqs[i] + 2.0 * self.twists[i] * act;
            out[i] = nu * z[i];
            out[n + i] = nu * z[n + i];
        }
        out[s] = self.mu * z[n + s] + self.eps * self.forcing_value(phi[0]);
        out[n + s] = self.mu * z[s];
    }

    fn hessian(&self, z: &[f64], _phi: &[f64], out: &mut [f64]) {
        let n = self.half_dim();
        let m = 2 * n;
        let s = self.saddle();
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.rotators() {
            let act = 0.5 * (z[i] * z[i] + z[n + i] * z[n + i]);
            let nu = self.freqs[i] + 2.0 * self.twists[i] * act;
            let c2 = 2.0 * self.twists[i];
            let idx = [i, n + i];
            for &a in &idx {
                for &b in &idx {
                    out[a * m + b] = c2 * z[a] * z[b] + if a == b { nu } else { 0.0 };
                }
            }
        }
        out[s * m + n + s] = self.mu;
        out[(n + s) * m + s] = self.mu;
    }

    fn third(&self, z: &[f64], _phi: &[f64], out: &mut [f64]) {
        let n = self.half_dim();
        let m = 2 * n;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.rotators() {
            let c2 = 2.0 * self.twists[i];
            let idx = [i, n + i];
            for &a in &idx {
                for &b in &idx {
                    for &c in &idx {
                        let mut v = 0.0;
                        if a == c {
                            v += z[b];
                        }
                        if b == c {
                            v += z[a];
                        }
                        if a == b {
                            v += z[c];
                        }
                        out[(a * m + b) * m + c] = c2 * v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivatives(h: &dyn Hamiltonian, z: &[f64], phi: &[f64]) {
        let m = h.phase_dim();
        let eps = 1e-6;
        let mut g = vec![0.0; m];
        let mut hess = vec![0.0; m * m];
        let mut t = vec![0.0; m * m * m];
        h.gradient(z, phi, &mut g);
        h.hessian(z, phi, &mut hess);
        h.third(z, phi, &mut t);
        for k in 0..m {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += eps;
            zm[k] -= eps;
            let fd = (h.energy(&zp, phi) - h.energy(&zm, phi)) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-7, "gradient {k}");
            let mut gp = vec![0.0; m];
            let mut gm = vec![0.0; m];
            h.gradient(&zp, phi, &mut gp);
            h.gradient(&zm, phi, &mut gm);
            let mut hp = vec![0.0; m * m];
            let mut hm = vec![0.0; m * m];
            h.hessian(&zp, phi, &mut hp);
            h.hessian(&zm, phi, &mut hm);
            for i in 0..m {
                assert!(((gp[i] - gm[i]) / (2.0 * eps) - hess[i * m + k]).abs() < 1e-7);
                for j in 0..m {
                    let fd = (hp[i * m + j] - hm[i * m + j]) / (2.0 * eps);
                    assert!((fd - t[(i * m + j) * m + k]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let tw = RotatorSaddle::twisted_saddle(0.618, 0.414, [0.1, 0.15], 0.3, 0.2);
        check_derivatives(&tw, &[0.3, -0.8, 0.1, 0.9, 0.2, -0.4], &[0.37]);
        let lin = RotatorSaddle::linear_saddle_forced(1.0, 0.5, 0.1, 1.0, 0.414);
        check_derivatives(&lin, &[0.3, -0.8, 0.1, 0.9], &[0.11]);
    }

    #[test]
    fn twisted_saddle_hits_requested_rotation() {
        let tw = RotatorSaddle::twisted_saddle(0.618, 0.414, [0.1, 0.15], 0.3, 0.2);
        assert!((tw.omega()[0] - 0.618).abs() < 1e-15);
        assert!((tw.alpha()[0] - 0.414).abs() < 1e-15);
        assert!((tw.period() - 2.0 * PI).abs() < 1e-15);
        assert!((tw.lambda() - (-0.3 * 2.0 * PI).exp()).abs() < 1e-16);
    }

    #[test]
    fn loop_solves_its_ode() {
        let lin = RotatorSaddle::linear_saddle_forced(1.0, 0.5, 0.3, 1.0, 0.414);
        let h = 1e-6;
        for phi in [0.0, 0.2, 0.77] {
            let dp = (lin.loop_momentum(phi + h) - lin.loop_momentum(phi - h)) / (2.0 * h);
            let rhs = -lin.mu * lin.loop_momentum(phi) - lin.eps * lin.forcing_value(phi);
            assert!((lin.alpha_hat[0] * dp - rhs).abs() < 1e-8);
        }
    }
}
