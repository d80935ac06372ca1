//! Quasi-Newton iteration for the torus `K`, its rank-one bundle `W` and the multiplier `λ`.

use crate::cohomology::{solve_nonresonant, solve_small_divisor, DiophantineParams};
use crate::dynamics::{
    flow_on_torus, second_variation_on_torus, standard_omega, Geometry, Hamiltonian,
    IntegratorOptions, StepStats,
};
use crate::error::{Error, Result};
use crate::fourier::{FourierSeries, GridField};
use crate::frames::{along, build_frame, rotate_field, Frame, FrameOptions};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A whiskered-torus problem: the system, its geometry, the rotation and the return time.
pub struct Problem<'a> {
    pub system: &'a dyn Hamiltonian,
    pub geometry: &'a dyn Geometry,
    pub dio: DiophantineParams,
    pub period: f64,
}

/// Approximate invariant objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub k: FourierSeries,
    pub w: FourierSeries,
    pub lambda: f64,
}

/// `E_K = φ_T∘(K, id) − K∘R` and `E_W = Dφ_T∘(K, id) W − W∘R λ`.
#[derive(Debug, Clone)]
pub struct InvarianceErrors {
    pub ek: FourierSeries,
    pub ew: FourierSeries,
    /// `Dφ_T` along `K`.
    pub dflow: GridField,
    /// `φ_T` along `K`.
    pub flow: GridField,
    pub stats: StepStats,
}

pub fn compute_errors(
    problem: &Problem,
    approx: &Approximation,
    opts: &IntegratorOptions,
) -> Result<InvarianceErrors> {
    let shift = problem.dio.shift();
    let kv = approx.k.to_field();
    let flow = flow_on_torus(problem.system, &kv, problem.period, opts)?;
    let kr = approx.k.rotate(&shift)?.to_field();
    let ek = flow.phi.sub(&kr)?.to_series();
    let wv = approx.w.to_field();
    let wr = approx.w.rotate(&shift)?.to_field();
    let ew = flow.dphi.matmul(&wv)?.sub(&wr.scale(approx.lambda))?.to_series();
    if !ek.is_finite() || !ew.is_finite() {
        return Err(Error::NonFinite("invariance errors".into()));
    }
    Ok(InvarianceErrors {
        ek,
        ew,
        dflow: flow.dphi,
        flow: flow.phi,
        stats: flow.stats,
    })
}

/// `η = Ω₀ P^T∘R Ω(K∘R) E`, split as `(n−1, 1, n−1, 1)`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub full: GridField,
    pub eta1: FourierSeries,
    pub eta2: FourierSeries,
    pub eta3: FourierSeries,
    pub eta4: FourierSeries,
}

pub fn project(
    problem: &Problem,
    frame: &Frame,
    k: &FourierSeries,
    err: &FourierSeries,
) -> Result<Projection> {
    let n = frame.n;
    let m = 2 * n;
    let shift = problem.dio.shift();
    let kr = k.rotate(&shift)?.to_field();
    let om_r = along(&kr, m, m, |z, o| problem.geometry.omega(z, o));
    let pr = rotate_field(&frame.p, &shift)?;
    let om0 = GridField::constant(k.grid(), m, m, &standard_omega(n));
    let weight = om0.matmul(&pr.transpose())?.matmul(&om_r)?.to_series();
    let s = weight.matmul(err)?;
    let full = s.to_field();
    Ok(Projection {
        eta1: s.block(0, n - 1, 0, 1),
        eta2: s.block(n - 1, n, 0, 1),
        eta3: s.block(n, m - 1, 0, 1),
        eta4: s.block(m - 1, m, 0, 1),
        full,
    })
}

/// `P ξ` as a dealiased product. `ξ` is first restricted to `|m_i| ≤ N_i/2 − guard`:
/// otherwise modes next to the band edge, where `P` moves part of the product past
/// the truncation, get amplified by nearby small divisors from one step to the next.
fn correction(frame: &Frame, xi: &FourierSeries, guard: usize) -> Result<FourierSeries> {
    let mut out = frame.p.to_series().matmul(&xi.low_pass(guard))?;
    out.project_band();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TorusStep {
    pub delta_k: FourierSeries,
    pub xi: FourierSeries,
    pub eta: Projection,
    pub avg_xi3: Vec<f64>,
}

/// Correction `ΔK = P ξ_K` for the torus.
pub fn torus_step(
    problem: &Problem,
    frame: &Frame,
    k: &FourierSeries,
    ek: &FourierSeries,
    lambda: f64,
    guard: usize,
) -> Result<TorusStep> {
    let dio = &problem.dio;
    let shift = dio.shift();
    let n = frame.n;
    let eta = project(problem, frame, k, ek)?;
    let xi2 = solve_nonresonant(lambda, 1.0, &eta.eta2, &shift, 0.0)?.xi;
    let r_eta3 = solve_small_divisor(&eta.eta3, dio, &shift, 0.0, 1.0, 1.0)?.xi;
    let s_r3 = frame.s.matmul(&r_eta3.to_field())?.to_series();
    let rhs_avg: Vec<f64> = eta
        .eta1
        .average()
        .iter()
        .zip(s_r3.average())
        .map(|(a, b)| a - b)
        .collect();
    let avg_inv = DMatrix::from_row_slice(n - 1, n - 1, &frame.avg_s_inv);
    let avg_xi3: Vec<f64> = (avg_inv * nalgebra::DVector::from_vec(rhs_avg)).iter().copied().collect();
    let xi3 = r_eta3.add_constant(&avg_xi3);
    let rhs1 = eta.eta1.sub(&frame.s.matmul(&xi3.to_field())?.to_series())?;
    let xi1 = solve_small_divisor(&rhs1, dio, &shift, 0.0, 1.0, 1.0)?.xi;
    let xi4 = solve_nonresonant(1.0 / lambda, 1.0, &eta.eta4, &shift, 0.0)?.xi;
    let xi = FourierSeries::vcat(&[&xi1, &xi2, &xi3, &xi4])?;
    let delta_k = correction(frame, &xi, guard)?;
    Ok(TorusStep {
        delta_k,
        xi,
        eta,
        avg_xi3,
    })
}

/// How `Ẽ_W` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BundleResidual {
    /// Gauss–Legendre quadrature of `D²φ_T(K + sΔK)[ΔK, W]` over `s ∈ [0, 1]`.
    Quadrature { nodes: usize },
    /// Evaluate `Dφ_T(K + ΔK) W − W∘R λ` directly.
    Direct,
}

impl Default for BundleResidual {
    fn default() -> Self {
        BundleResidual::Quadrature { nodes: 6 }
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(count: usize) -> Vec<(f64, f64)> {
    // Newton on Legendre polynomials; fine for the small counts used here.
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (count as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for kk in 2..=count {
                let k = kk as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = count as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// `Ẽ_W = E_W + ∫₀¹ D²φ_T(K + sΔK)[ΔK, W] ds`.
pub fn bundle_residual(
    problem: &Problem,
    approx: &Approximation,
    ew: &FourierSeries,
    delta_k: &FourierSeries,
    mode: BundleResidual,
    opts: &IntegratorOptions,
) -> Result<FourierSeries> {
    match mode {
        BundleResidual::Quadrature { nodes } => {
            let kv = approx.k.to_field();
            let dk = delta_k.to_field();
            let wv = approx.w.to_field();
            let mut acc = ew.to_field();
            for (s, weight) in gauss_legendre(nodes) {
                let pts = kv.add(&dk.scale(s))?;
                let v = second_variation_on_torus(problem.system, &pts, &dk, &wv, problem.period, opts)?;
                acc = acc.add(&v.scale(weight))?;
            }
            Ok(acc.to_series())
        }
        BundleResidual::Direct => {
            let moved = Approximation {
                k: approx.k.add(delta_k)?,
                w: approx.w.clone(),
                lambda: approx.lambda,
            };
            Ok(compute_errors(problem, &moved, opts)?.ew)
        }
    }
}

#[derive(Debug, Clone)]
pub struct BundleStep {
    pub delta_w: FourierSeries,
    pub delta_lambda: f64,
    pub xi: FourierSeries,
    pub eta: Projection,
}

/// Correction `(ΔW, Δλ)` from `Ẽ_W`, reusing the frame built at `K`.
pub fn bundle_step(
    problem: &Problem,
    frame: &Frame,
    k: &FourierSeries,
    ew_tilde: &FourierSeries,
    lambda: f64,
    guard: usize,
) -> Result<BundleStep> {
    let dio = &problem.dio;
    let shift = dio.shift();
    let eta = project(problem, frame, k, ew_tilde)?;
    let delta_lambda = -eta.eta2.average()[0];
    let xi3 = solve_nonresonant(1.0, lambda, &eta.eta3, &shift, 0.0)?.xi;
    let rhs1 = eta.eta1.sub(&frame.s.matmul(&xi3.to_field())?.to_series())?;
    let xi1 = solve_nonresonant(1.0, lambda, &rhs1, &shift, 0.0)?.xi;
    let xi2 = solve_small_divisor(&eta.eta2, dio, &shift, 0.0, 1.0, 1.0)?
        .xi
        .scale(1.0 / lambda);
    let xi4 = solve_nonresonant(1.0 / lambda, lambda, &eta.eta4, &shift, 0.0)?.xi;
    let xi = FourierSeries::vcat(&[&xi1, &xi2, &xi3, &xi4])?;
    let delta_w = correction(frame, &xi, guard)?;
    Ok(BundleStep {
        delta_w,
        delta_lambda,
        xi,
        eta,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Stop when `max(‖E_K‖, ‖E_W‖)` at radius zero drops below this.
    pub tol: f64,
    pub rho: f64,
    pub delta: f64,
    pub rho_inf: f64,
    pub bundle_residual: BundleResidual,
    pub reduce_torsion: bool,
    /// Radius of the domain around the initial torus (grid sup norm).
    pub domain_radius: f64,
    /// Modes within this distance of the Nyquist index are dropped from the corrections.
    pub band_guard: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iters: 12,
            tol: 1e-11,
            rho: 0.02,
            delta: 0.002,
            rho_inf: 0.01,
            bundle_residual: BundleResidual::default(),
            reduce_torsion: false,
            domain_radius: 1.0,
            band_guard: 2,
        }
    }
}

impl NewtonOptions {
    /// Ratio `a = (ρ − ρ_∞)/(ρ − 3δ − ρ_∞)` of the radius schedule.
    pub fn schedule_ratio(&self) -> f64 {
        (self.rho - self.rho_inf) / (self.rho - 3.0 * self.delta - self.rho_inf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.delta > 0.0 && self.rho_inf >= 0.0) {
            return Err(Error::Config("rho and delta must be positive".into()));
        }
        if 3.0 * self.delta >= self.rho - self.rho_inf {
            return Err(Error::Config(format!(
                "delta = {} too large: need 3 delta < rho - rho_inf = {}",
                self.delta,
                self.rho - self.rho_inf
            )));
        }
        if self.band_guard == 0 {
            return Err(Error::Config("band_guard must be at least 1".into()));
        }
        if self.tol <= 0.0 || self.max_iters == 0 {
            return Err(Error::Config("tol and max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub j: usize,
    pub rho_j: f64,
    pub delta_j: f64,
    #[serde(rename = "normEK")]
    pub norm_ek: f64,
    #[serde(rename = "normEW")]
    pub norm_ew: f64,
    pub lambda: f64,
    #[serde(rename = "avgS_inv_norm")]
    pub avg_s_inv_norm: f64,
    #[serde(rename = "E_j")]
    pub e_j: f64,
    /// `max(‖E_K‖_0, ‖E_W‖_0)`, the stopping measure.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub approx: Approximation,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub errors: InvarianceErrors,
}

pub fn max_row_sum(mat: &[f64], rows: usize, cols: usize) -> f64 {
    (0..rows)
        .map(|r| mat[r * cols..(r + 1) * cols].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Combined error `max(‖E_K‖/(γ²δ^{2τ}), ‖E_W‖)`.
pub fn combined_error(ek: f64, ew: f64, gamma: f64, delta: f64, tau: f64) -> f64 {
    (ek / (gamma * gamma * delta.powf(2.0 * tau))).max(ew)
}

/// Run the quasi-Newton iteration from `initial`.
pub fn iterate(
    problem: &Problem,
    initial: &Approximation,
    newton: &NewtonOptions,
    integ: &IntegratorOptions,
    mut on_record: impl FnMut(&IterationRecord),
) -> Result<NewtonResult> {
    newton.validate()?;
    let a = newton.schedule_ratio();
    let k0 = initial.k.to_field();
    let frame_opts = FrameOptions {
        reduce_torsion: newton.reduce_torsion,
        ..FrameOptions::default()
    };
    let mut approx = initial.clone();
    let mut records = Vec::new();
    let mut rho_j = newton.rho;
    let mut growth = 0;
    let mut stalled = 0;
    let mut last_e: Option<f64> = None;
    for j in 0..=newton.max_iters {
        let dist = approx.k.to_field().sub(&k0)?.max_abs();
        if dist >= newton.domain_radius {
            return Err(Error::Hypothesis(format!(
                "torus left the domain: distance {dist:e} >= R = {}",
                newton.domain_radius
            )));
        }
        let delta_j = newton.delta / a.powi(j as i32);
        let errors = compute_errors(problem, &approx, integ)?;
        let residual = errors.ek.strip_norm(0.0).max(errors.ew.strip_norm(0.0));
        let norm_ek = errors.ek.strip_norm(rho_j);
        let norm_ew = errors.ew.strip_norm(rho_j);
        let e_j = combined_error(norm_ek, norm_ew, problem.dio.gamma, delta_j, problem.dio.tau);
        if !residual.is_finite() {
            return Err(Error::NonFinite(format!("iteration {j}")));
        }
        let done = residual <= newton.tol || j == newton.max_iters;
        let frame = if done {
            None
        } else {
            Some(build_frame(
                problem.system,
                problem.geometry,
                &approx.k,
                &approx.w,
                approx.lambda,
                &errors.dflow,
                &problem.dio,
                &frame_opts,
            )?)
        };
        let avg_s_inv_norm = match &frame {
            Some(f) => max_row_sum(&f.avg_s_inv, f.n - 1, f.n - 1),
            None => records
                .last()
                .map(|r: &IterationRecord| r.avg_s_inv_norm)
                .unwrap_or(f64::NAN),
        };
        let record = IterationRecord {
            j,
            rho_j,
            delta_j,
            norm_ek,
            norm_ew,
            lambda: approx.lambda,
            avg_s_inv_norm,
            e_j,
            residual,
        };
        log::info!(
            "iter {j}: |E_K| = {:.3e}, |E_W| = {:.3e}, lambda = {:.15}",
            record.norm_ek,
            record.norm_ew,
            record.lambda
        );
        on_record(&record);
        records.push(record);
        if let Some(prev) = last_e {
            growth = if residual > 10.0 * prev { growth + 1 } else { 0 };
            stalled = if residual > 0.5 * prev { stalled + 1 } else { 0 };
            if growth >= 2 {
                return Err(Error::Divergence {
                    step: j,
                    from: prev,
                    to: residual,
                });
            }
        }
        last_e = Some(residual);
        if stalled >= 2 && residual > newton.tol {
            log::warn!("residual stalled at {residual:.3e}; discretization floor reached");
        }
        let frame = if stalled >= 2 { None } else { frame };
        let Some(frame) = frame else {
            return Ok(NewtonResult {
                converged: residual <= newton.tol,
                approx,
                records,
                errors,
            });
        };
        let ts = torus_step(problem, &frame, &approx.k, &errors.ek, approx.lambda, newton.band_guard)?;
        let ew_tilde = bundle_residual(problem, &approx, &errors.ew, &ts.delta_k, newton.bundle_residual, integ)?;
        let bs = bundle_step(problem, &frame, &approx.k, &ew_tilde, approx.lambda, newton.band_guard)?;
        approx = Approximation {
            k: approx.k.add(&ts.delta_k)?,
            w: approx.w.add(&bs.delta_w)?,
            lambda: approx.lambda + bs.delta_lambda,
        };
        if approx.lambda.abs() >= 1.0 {
            return Err(Error::Hypothesis(format!("multiplier left the unit disk: {}", approx.lambda)));
        }
        rho_j -= 3.0 * delta_j;
    }
    unreachable!("loop returns on its last pass")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for count in 1..=8 {
            let rule = gauss_legendre(count);
            for deg in 0..(2 * count) {
                let q: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "count {count} deg {deg}");
            }
        }
    }

    #[test]
    fn schedule_ratio_exceeds_one() {
        let o = NewtonOptions::default();
        assert!(o.schedule_ratio() > 1.0);
        let bad = NewtonOptions {
            delta: 0.01,
            ..o
        };
        assert!(bad.validate().is_err());
    }

    mod props {
        use super::*;
        use crate::dynamics::{RotatorSaddle, StandardGeometry};
        use crate::fourier::{Complex64, GridSpec};
        use proptest::prelude::*;

        fn setup() -> (RotatorSaddle, GridSpec, DiophantineParams) {
            let sys = RotatorSaddle::twisted_saddle(0.6180339887498949, 0.41421356237309515, [0.1, 0.15], 0.3, 0.2);
            let grid = GridSpec::new(1, 1, vec![8, 8]).unwrap();
            let dio = DiophantineParams::measure(&sys.omega(), &sys.alpha(), 2.0, 8).unwrap();
            (sys, grid, dio)
        }

        #[test]
        fn exact_start_stops_immediately() {
            let (sys, grid, dio) = setup();
            let geo = StandardGeometry { n: 3 };
            let problem = Problem { system: &sys, geometry: &geo, dio, period: sys.period() };
            let start = Approximation {
                k: sys.exact_torus(&grid).to_series(),
                w: sys.exact_bundle(&grid).to_series(),
                lambda: sys.lambda(),
            };
            let opts = NewtonOptions { tol: 1e-9, ..NewtonOptions::default() };
            let out = iterate(&problem, &start, &opts, &IntegratorOptions::default(), |_| {}).unwrap();
            assert!(out.converged);
            assert_eq!(out.records.len(), 1);
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(6))]

            #[test]
            fn corrections_respect_the_gauge(row in 0usize..6, m0 in -2i64..=2, m1 in -2i64..=2, amp in -1e-3f64..1e-3) {
                let (sys, grid, dio) = setup();
                let geo = StandardGeometry { n: 3 };
                let problem = Problem { system: &sys, geometry: &geo, dio: dio.clone(), period: sys.period() };
                let mut k = sys.exact_torus(&grid).to_series();
                let c = k.coeff(row, 0, &[m0, m1]);
                k.set_coeff(row, 0, &[m0, m1], c + Complex64::new(amp, 0.5 * amp)).unwrap();
                let approx = Approximation { k, w: sys.exact_bundle(&grid).to_series(), lambda: sys.lambda() * 1.01 };
                let integ = IntegratorOptions::default();
                let errors = compute_errors(&problem, &approx, &integ).unwrap();
                let frame = build_frame(&sys, &geo, &approx.k, &approx.w, approx.lambda, &errors.dflow, &dio, &FrameOptions::default()).unwrap();
                let ts = torus_step(&problem, &frame, &approx.k, &errors.ek, approx.lambda, 2).unwrap();
                let bs = bundle_step(&problem, &frame, &approx.k, &errors.ew, approx.lambda, 2).unwrap();
                let n = frame.n;
                for r in 0..n - 1 {
                    prop_assert_eq!(ts.xi.coeff(r, 0, &[0, 0]), Complex64::default());
                }
                prop_assert_eq!(bs.xi.coeff(n - 1, 0, &[0, 0]), Complex64::default());
            }
        }
    }
}
