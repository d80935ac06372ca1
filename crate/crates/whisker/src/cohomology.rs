//! Twisted and small-divisor cohomological equations on the torus.

use crate::error::{Error, Result};
use crate::fourier::{l1, Complex64, FourierSeries, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Divisors below this modulus are treated as exact resonances.
pub const RESONANCE_FLOOR: f64 = 1e-14;

/// Rotation `(ω, α)` on `T^{d+ℓ}` with its Diophantine data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    pub omega: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: f64,
    pub tau: f64,
}

impl DiophantineParams {
    /// Measure γ by brute force over `0 < |m|_1 <= k_max`.
    pub fn measure(omega: &[f64], alpha: &[f64], tau: f64, k_max: usize) -> Result<Self> {
        let gamma = diophantine_gamma(omega, alpha, tau, k_max)?;
        Ok(Self {
            omega: omega.to_vec(),
            alpha: alpha.to_vec(),
            gamma,
            tau,
        })
    }

    pub fn shift(&self) -> Vec<f64> {
        self.omega.iter().chain(&self.alpha).copied().collect()
    }

    pub fn doubled_shift(&self) -> Vec<f64> {
        self.shift().iter().map(|s| 2.0 * s).collect()
    }
}

/// Solution of a cohomological equation together with an a-priori norm bound.
#[derive(Debug, Clone)]
pub struct CohomologySolution {
    pub xi: FourierSeries,
    /// Upper bound for the solution norm at the stated radius.
    pub norm_bound: f64,
    pub bound_radius: f64,
    /// Smallest divisor modulus over the band.
    pub divisor_min: f64,
}

fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

fn phase(mode: &[i64], shift: &[f64]) -> f64 {
    mode.iter().zip(shift).map(|(&m, &s)| m as f64 * s).sum()
}

fn check_shift(eta: &FourierSeries, shift: &[f64]) -> Result<()> {
    if shift.len() != eta.grid().dims() {
        return Err(Error::Shape(format!(
            "rotation has {} components, grid has {} axes",
            shift.len(),
            eta.grid().dims()
        )));
    }
    Ok(())
}

/// Solve `a ξ − b ξ∘R = η` entrywise for `|a| ≠ |b|`.
pub fn solve_nonresonant(
    a: f64,
    b: f64,
    eta: &FourierSeries,
    shift: &[f64],
    rho: f64,
) -> Result<CohomologySolution> {
    check_shift(eta, shift)?;
    let gap = (a.abs() - b.abs()).abs();
    if gap <= RESONANCE_FLOOR * a.abs().max(b.abs()).max(1.0) {
        return Err(Error::Invalid(format!(
            "non-resonant solve needs |a| != |b| (a = {a}, b = {b})"
        )));
    }
    let grid = eta.grid();
    let mut divisor_min = f64::INFINITY;
    let factors: Vec<Complex64> = (0..grid.total())
        .map(|p| {
            if grid.is_nyquist(p) {
                return Complex64::default();
            }
            let m = grid.mode(p);
            let div = a - b * Complex64::from_polar(1.0, 2.0 * PI * phase(&m, shift));
            divisor_min = divisor_min.min(div.norm());
            1.0 / div
        })
        .collect();
    let xi = eta.map_modes(&factors);
    Ok(CohomologySolution {
        norm_bound: eta.strip_norm(rho) / gap,
        xi,
        bound_radius: rho,
        divisor_min,
    })
}

/// Solve `ξ − ξ∘R = η − ⟨η⟩` with `⟨ξ⟩ = 0`.
pub fn solve_small_divisor(
    eta: &FourierSeries,
    dio: &DiophantineParams,
    shift: &[f64],
    rho: f64,
    delta: f64,
    c_r: f64,
) -> Result<CohomologySolution> {
    check_shift(eta, shift)?;
    let grid = eta.grid();
    let mut divisor_min = f64::INFINITY;
    let mut factors = Vec::with_capacity(grid.total());
    for p in 0..grid.total() {
        let m = grid.mode(p);
        if p == 0 || grid.is_nyquist(p) {
            factors.push(Complex64::default());
            continue;
        }
        let div = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 2.0 * PI * phase(&m, shift));
        let modulus = div.norm();
        if modulus < RESONANCE_FLOOR {
            return Err(Error::Resonance { mode: m, modulus });
        }
        divisor_min = divisor_min.min(modulus);
        factors.push(1.0 / div);
    }
    let xi = eta.map_modes(&factors);
    let bound = c_r / (dio.gamma * delta.powf(dio.tau)) * eta.strip_norm(rho);
    Ok(CohomologySolution {
        xi,
        norm_bound: bound,
        bound_radius: rho - delta,
        divisor_min,
    })
}

/// `γ = min dist(j·ω + k·α, Z) |m|_1^τ` over `0 < |m|_1 <= k_max`.
pub fn diophantine_gamma(omega: &[f64], alpha: &[f64], tau: f64, k_max: usize) -> Result<f64> {
    let freq: Vec<f64> = omega.iter().chain(alpha).copied().collect();
    if freq.is_empty() {
        return Err(Error::Invalid("empty rotation vector".into()));
    }
    let mut best = f64::INFINITY;
    let mut worst_mode = Vec::new();
    let dim = freq.len();
    let k = k_max as i64;
    let side = (2 * k + 1) as usize;
    let total = side.pow(dim as u32);
    let mut mode = vec![0i64; dim];
    for flat in 0..total {
        let mut rest = flat;
        for m in mode.iter_mut() {
            *m = (rest % side) as i64 - k;
            rest /= side;
        }
        let n1 = l1(&mode);
        if n1 == 0 || n1 > k || !is_leading_positive(&mode) {
            continue;
        }
        let v = dist_to_int(phase(&mode, &freq)) * (n1 as f64).powf(tau);
        if v < best {
            best = v;
            worst_mode = mode.clone();
        }
    }
    if best < RESONANCE_FLOOR {
        return Err(Error::Resonance {
            mode: worst_mode,
            modulus: best,
        });
    }
    Ok(best)
}

fn is_leading_positive(m: &[i64]) -> bool {
    m.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Sharp small-divisor constant of the weighted-ℓ1 norm over the band:
/// `max_m γ δ^τ e^{-2πδ|m|_1} / |1 − e^{2πi m·ν}|`.
pub fn russmann_mode_bound(dio: &DiophantineParams, grid: &GridSpec, delta: f64) -> Result<f64> {
    let shift = dio.shift();
    let mut best: f64 = 0.0;
    for p in 1..grid.total() {
        if grid.is_nyquist(p) {
            continue;
        }
        let m = grid.mode(p);
        let div = (Complex64::new(1.0, 0.0)
            - Complex64::from_polar(1.0, 2.0 * PI * phase(&m, &shift)))
        .norm();
        if div < RESONANCE_FLOOR {
            return Err(Error::Resonance { mode: m, modulus: div });
        }
        let r = dio.gamma * delta.powf(dio.tau) * (-2.0 * PI * delta * l1(&m) as f64).exp() / div;
        best = best.max(r);
    }
    Ok(best)
}

/// How the small-divisor constant `c_R` is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RussmannConstant {
    Fixed { value: f64 },
    Empirical { samples: usize, seed: u64, safety: f64 },
}

impl Default for RussmannConstant {
    fn default() -> Self {
        RussmannConstant::Empirical {
            samples: 4000,
            seed: 0x5eed,
            safety: 2.0,
        }
    }
}

impl RussmannConstant {
    pub fn resolve(
        &self,
        dio: &DiophantineParams,
        grid: &GridSpec,
        rho: f64,
        delta: f64,
    ) -> Result<f64> {
        match *self {
            RussmannConstant::Fixed { value } => Ok(value),
            RussmannConstant::Empirical {
                samples,
                seed,
                safety,
            } => Ok(safety * empirical_russmann(dio, grid, rho, delta, samples, seed)?),
        }
    }
}

/// Largest ratio `‖ξ‖_{ρ−δ} γδ^τ / ‖η‖_ρ` over random band-limited right-hand sides.
/// Samples alternate between dense decaying series and sparse ones with a few random modes.
pub fn empirical_russmann(
    dio: &DiophantineParams,
    grid: &GridSpec,
    rho: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.total();
    let shift = dio.shift();
    let band: Vec<usize> = (1..n).filter(|&p| !grid.is_nyquist(p)).collect();
    let mut best: f64 = 0.0;
    for s in 0..samples {
        let mut coeffs = vec![Complex64::default(); n];
        if s % 2 == 0 {
            for &p in &band {
                let decay = (-2.0 * PI * rho * l1(&grid.mode(p)) as f64).exp();
                coeffs[p] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay;
            }
        } else {
            let count = if s % 4 == 1 { 1 } else { rng.gen_range(2..=3) };
            for _ in 0..count {
                let p = band[rng.gen_range(0..band.len())];
                coeffs[p] = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            }
        }
        let eta = FourierSeries::from_coeffs(grid, 1, 1, coeffs)?;
        let norm = eta.strip_norm(rho);
        if norm == 0.0 {
            continue;
        }
        let sol = solve_small_divisor(&eta, dio, &shift, rho, delta, 1.0)?;
        let ratio = sol.xi.strip_norm(rho - delta) * dio.gamma * delta.powf(dio.tau) / norm;
        best = best.max(ratio);
    }
    Ok(best)
}
