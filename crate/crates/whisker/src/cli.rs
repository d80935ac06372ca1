//! Run configuration and the `compute`, `diagnose` and `certify` pipelines.
//!
//! Artifacts in the output directory:
//! - `k.fourier`, `w.fourier`: coefficient dumps of the torus and its bundle
//! - `solution.json`: multiplier, convergence flag and final residuals
//! - `iterations.jsonl`: one record per Newton iteration
//! - `measured.json`: norms and constants measured along the final torus
//! - `bounds.json`: hypothesis bounds at the configured margin
//! - `diagnostics.json`, `certificate.json`: reports of the other two commands

use crate::certificate::{certify, Certificate};
use crate::cohomology::{DiophantineParams, RussmannConstant};
use crate::diagnostics::{
    bounds_from_measurements, check_bounds, check_step_bounds, measure_constants, measure_norms, one_step,
    residuals, second_flow_derivative, BoundCheck, DomainData, IdentityCheck, MeasuredConstants,
};
use crate::dynamics::{Hamiltonian, IntegratorOptions, RotatorSaddle, StandardGeometry};
use crate::error::{Error, Result};
use crate::fourier::{read_text, write_text, Complex64, FourierSeries, GridSpec};
use crate::frames::{build_frame, FrameOptions};
use crate::ledger::{build_ledger, HypothesisBounds, MeasuredNorms};
use crate::newton::{compute_errors, iterate, Approximation, IterationRecord, NewtonOptions, Problem};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    TwistedSaddle {
        omega: f64,
        alpha: f64,
        twists: [f64; 2],
        mu: f64,
        eps: f64,
    },
    LinearSaddleForced {
        omega1: f64,
        mu: f64,
        eps: f64,
        radius: f64,
        alpha: f64,
    },
}

impl SystemConfig {
    pub fn build(&self) -> RotatorSaddle {
        match *self {
            SystemConfig::TwistedSaddle { omega, alpha, twists, mu, eps } => {
                RotatorSaddle::twisted_saddle(omega, alpha, twists, mu, eps)
            }
            SystemConfig::LinearSaddleForced { omega1, mu, eps, radius, alpha } => {
                RotatorSaddle::linear_saddle_forced(omega1, mu, eps, radius, alpha)
            }
        }
    }
}

/// Optional restatement of the rotation; checked against the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    pub period: Option<f64>,
    pub omega: Option<Vec<f64>>,
    pub alpha_hat: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = IntegratorOptions::default();
        Self { tol: d.tol, max_steps: d.max_steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Closed-form torus and bundle of the benchmark.
    Exact {},
    /// Closed-form objects with `modes` random Fourier coefficients of `K` shifted by `amplitude`.
    Perturbed {
        seed: u64,
        modes: usize,
        amplitude: f64,
        max_mode: i64,
        #[serde(default = "one")]
        lambda_factor: f64,
    },
    /// Previously dumped objects.
    Dump { k: PathBuf, w: PathBuf, lambda: f64 },
}

fn one() -> f64 {
    1.0
}

fn default_margin() -> f64 {
    2.0
}

fn default_tau() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    /// Bounds are `margin × measured`.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Analyticity radius of the vector field; defaults to `2ρ`.
    pub r: Option<f64>,
    /// Radius of the domain around the initial torus; defaults to the Newton domain radius.
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    #[serde(default)]
    pub russmann: RussmannConstant,
    /// Number of nodes sampled for the second derivative of the flow.
    #[serde(default = "default_d2_samples")]
    pub d2phi_samples: usize,
    /// Bounds file used by `certify` instead of `bounds.json` in the output directory.
    pub bounds_file: Option<PathBuf>,
    /// Strip of the certificate; each defaults to the Newton value.
    pub rho: Option<f64>,
    pub rho_inf: Option<f64>,
    pub delta: Option<f64>,
}

fn default_d2_samples() -> usize {
    8
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            margin: default_margin(),
            r: None,
            big_r: None,
            russmann: RussmannConstant::default(),
            d2phi_samples: default_d2_samples(),
            bounds_file: None,
            rho: None,
            rho_inf: None,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub system: SystemConfig,
    pub grid: GridConfig,
    pub rotation: Option<RotationConfig>,
    /// Diophantine exponent used to measure `γ`.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub newton: NewtonOptions,
    pub initial: InitialConfig,
    #[serde(default)]
    pub certificate: CertificateConfig,
    pub threads: Option<usize>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.newton.validate()?;
        if self.integrator.tol <= 0.0 || self.integrator.max_steps == 0 {
            return Err(Error::Config("integrator tol and max_steps must be positive".into()));
        }
        if self.certificate.margin <= 1.0 {
            return Err(Error::Config("certificate margin must exceed 1".into()));
        }
        let (rho, rho_inf, delta) = self.strip();
        if !(rho_inf > 0.0 && delta > 0.0 && 3.0 * delta < rho - rho_inf) {
            return Err(Error::Config(format!(
                "certificate strip needs 0 < rho_inf, 0 < 3 delta < rho - rho_inf; got rho = {rho}, rho_inf = {rho_inf}, delta = {delta}"
            )));
        }
        let sys = self.system.build();
        let dims = sys.d() + sys.alpha_hat.len();
        if self.grid.sizes.len() != dims {
            return Err(Error::Config(format!(
                "grid has {} axes, the system needs {dims}",
                self.grid.sizes.len()
            )));
        }
        if let Some(rot) = &self.rotation {
            let period = sys.period();
            if let Some(t) = rot.period {
                if !close(t, period) {
                    return Err(Error::Config(format!("period {t} does not match the system's {period}")));
                }
            }
            if let Some(omega) = &rot.omega {
                if omega.len() != sys.d() || omega.iter().zip(sys.omega()).any(|(a, b)| !close(*a, b)) {
                    return Err(Error::Config("omega does not match the system".into()));
                }
            }
            if let Some(ah) = &rot.alpha_hat {
                let alpha = sys.alpha();
                let t = rot.period.unwrap_or(period);
                if ah.len() != alpha.len() || ah.iter().zip(&alpha).any(|(a, al)| !close(a * t, *al)) {
                    return Err(Error::Config("alpha must equal alpha_hat times the period".into()));
                }
            }
        }
        Ok(())
    }

    pub fn integrator(&self) -> IntegratorOptions {
        IntegratorOptions {
            tol: self.integrator.tol,
            max_steps: self.integrator.max_steps,
            ..IntegratorOptions::default()
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let sys = self.system.build();
        GridSpec::new(sys.d(), sys.alpha_hat.len(), self.grid.sizes.clone())
    }

    pub fn diophantine(&self, sys: &RotatorSaddle) -> Result<DiophantineParams> {
        let k_max = self.grid.sizes.iter().copied().max().unwrap_or(1);
        DiophantineParams::measure(&sys.omega(), &sys.alpha(), self.tau, k_max)
    }

    /// `(ρ, ρ_∞, δ)` of the certificate.
    pub fn strip(&self) -> (f64, f64, f64) {
        let (c, n) = (&self.certificate, &self.newton);
        (c.rho.unwrap_or(n.rho), c.rho_inf.unwrap_or(n.rho_inf), c.delta.unwrap_or(n.delta))
    }

    pub fn domain(&self, dio: &DiophantineParams, grid: &GridSpec) -> Result<DomainData> {
        let (rho, rho_inf, delta) = self.strip();
        let c_r = self.certificate.russmann.resolve(dio, grid, rho, delta)?;
        Ok(DomainData {
            r: self.certificate.r.unwrap_or(2.0 * rho),
            big_r: self.certificate.big_r.unwrap_or(self.newton.domain_radius),
            rho,
            rho_inf,
            delta,
            gamma: dio.gamma,
            tau: dio.tau,
            c_r,
        })
    }
}

/// Shift `count` random coefficients of `k` by `amplitude` with a random phase.
pub fn perturb_modes(
    k: &FourierSeries,
    seed: u64,
    count: usize,
    amplitude: f64,
    max_mode: i64,
) -> Result<FourierSeries> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = k.clone();
    let dims = k.grid().dims();
    for _ in 0..count {
        let row = rng.gen_range(0..k.rows());
        let mode: Vec<i64> = (0..dims).map(|_| rng.gen_range(-max_mode..=max_mode)).collect();
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let c = out.coeff(row, 0, &mode);
        out.set_coeff(row, 0, &mode, c + Complex64::from_polar(amplitude, phase))?;
    }
    Ok(out)
}

pub fn initial_approximation(cfg: &RunConfig, sys: &RotatorSaddle, grid: &GridSpec) -> Result<Approximation> {
    let exact = || Approximation {
        k: sys.exact_torus(grid).to_series(),
        w: sys.exact_bundle(grid).to_series(),
        lambda: sys.lambda(),
    };
    match &cfg.initial {
        InitialConfig::Exact {} => Ok(exact()),
        InitialConfig::Perturbed { seed, modes, amplitude, max_mode, lambda_factor } => {
            let base = exact();
            Ok(Approximation {
                k: perturb_modes(&base.k, *seed, *modes, *amplitude, *max_mode)?,
                w: base.w,
                lambda: base.lambda * lambda_factor,
            })
        }
        InitialConfig::Dump { k, w, lambda } => Ok(Approximation {
            k: read_dump(k)?,
            w: read_dump(w)?,
            lambda: *lambda,
        }),
    }
}

pub fn read_dump(path: &Path) -> Result<FourierSeries> {
    let file = File::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    read_text(BufReader::new(file))
}

fn write_dump(path: &Path, s: &FourierSeries) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_text(s, &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grid: Vec<usize>,
    pub norm_ek: f64,
    pub norm_ew: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    pub norms: MeasuredNorms,
    pub constants: MeasuredConstants,
    pub domain: DomainData,
}

/// Everything `compute` produced, also returned in memory.
#[derive(Debug, Clone)]
pub struct ComputeOutput {
    pub approx: Approximation,
    pub summary: SolutionSummary,
    pub records: Vec<IterationRecord>,
    pub measurements: Measurements,
    pub bounds: HypothesisBounds,
}

pub fn cmd_compute(cfg: &RunConfig, out: &Path) -> Result<ComputeOutput> {
    std::fs::create_dir_all(out)?;
    let sys = cfg.system.build();
    let grid = cfg.grid()?;
    let geo = StandardGeometry { n: sys.half_dim() };
    let dio = cfg.diophantine(&sys)?;
    let problem = Problem { system: &sys, geometry: &geo, dio: dio.clone(), period: sys.period() };
    let integ = cfg.integrator();
    let initial = initial_approximation(cfg, &sys, &grid)?;

    let mut log = BufWriter::new(File::create(out.join("iterations.jsonl"))?);
    let mut log_err = None;
    let result = iterate(&problem, &initial, &cfg.newton, &integ, |r| {
        if let Err(e) = serde_json::to_writer(&mut log, r).map_err(std::io::Error::from).and_then(|_| writeln!(log)) {
            log_err.get_or_insert(e);
        }
    });
    log.flush()?;
    if let Some(e) = log_err {
        return Err(e.into());
    }
    let result = result?;
    write_dump(&out.join("k.fourier"), &result.approx.k)?;
    write_dump(&out.join("w.fourier"), &result.approx.w)?;

    let rho = cfg.newton.rho;
    let last = result.records.last().expect("at least one record");
    let summary = SolutionSummary {
        lambda: result.approx.lambda,
        converged: result.converged,
        iterations: last.j,
        grid: grid.sizes().to_vec(),
        norm_ek: result.errors.ek.strip_norm(rho),
        norm_ew: result.errors.ew.strip_norm(rho),
        residual: last.residual,
    };
    write_json(&out.join("solution.json"), &summary)?;

    let frame = build_frame(
        &sys,
        &geo,
        &result.approx.k,
        &result.approx.w,
        result.approx.lambda,
        &result.errors.dflow,
        &dio,
        &FrameOptions { reduce_torsion: cfg.newton.reduce_torsion, ..FrameOptions::default() },
    )?;
    let (cert_rho, _, _) = cfg.strip();
    let norms = measure_norms(&problem, &result.approx, &result.errors, &frame, Some(&initial.k), cert_rho)?;
    let stride = (grid.total() / cfg.certificate.d2phi_samples.max(1)).max(1);
    let d2phi = second_flow_derivative(&sys, &result.approx.k.to_field(), sys.period(), stride, &integ)?;
    let constants = measure_constants(&problem, &result.approx, &result.errors, cert_rho, d2phi);
    let domain = cfg.domain(&dio, &grid)?;
    let measurements = Measurements { norms, constants, domain };
    write_json(&out.join("measured.json"), &measurements)?;
    let bounds = bounds_from_measurements(
        &measurements.constants,
        &measurements.norms,
        &measurements.domain,
        cfg.certificate.margin,
    );
    write_json(&out.join("bounds.json"), &bounds)?;
    if !result.converged {
        log::warn!("Newton iteration stopped at residual {:.3e} without converging", last.residual);
    }
    Ok(ComputeOutput {
        approx: result.approx,
        summary,
        records: result.records,
        measurements,
        bounds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub norm_ek: f64,
    pub norm_ew: f64,
    pub identities: Vec<IdentityCheck>,
    pub bounds: Vec<BoundCheck>,
    pub step_bounds: Vec<BoundCheck>,
    pub avg_eta3: Vec<f64>,
    pub reduction_residual: f64,
    pub unstable_residual: f64,
    pub all_identities_hold: bool,
    pub all_bounds_hold: bool,
}

/// Tolerance for the round-off identities in the report.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Residuals of the dumped solution in `dir`, with the ledger built from `bounds.json`.
pub fn cmd_diagnose(cfg: &RunConfig, dir: &Path) -> Result<DiagnosticsReport> {
    let sys = cfg.system.build();
    let geo = StandardGeometry { n: sys.half_dim() };
    let dio = cfg.diophantine(&sys)?;
    let problem = Problem { system: &sys, geometry: &geo, dio: dio.clone(), period: sys.period() };
    let integ = cfg.integrator();
    let summary: SolutionSummary = read_json(&dir.join("solution.json"))?;
    let approx = Approximation {
        k: read_dump(&dir.join("k.fourier"))?,
        w: read_dump(&dir.join("w.fourier"))?,
        lambda: summary.lambda,
    };
    let errors = compute_errors(&problem, &approx, &integ)?;
    let frame = build_frame(
        &sys,
        &geo,
        &approx.k,
        &approx.w,
        approx.lambda,
        &errors.dflow,
        &dio,
        &FrameOptions { reduce_torsion: cfg.newton.reduce_torsion, ..FrameOptions::default() },
    )?;
    let res = residuals(&problem, &approx, &errors, &frame)?;
    let (rho, _, _) = cfg.strip();
    let (ek, ew) = (errors.ek.strip_norm(rho), errors.ew.strip_norm(rho));
    let bounds: HypothesisBounds = read_json(&bounds_path(cfg, dir))?;
    let measured = measure_norms(&problem, &approx, &errors, &frame, None, rho)?;
    let ledger = build_ledger(&bounds, &measured)?;
    let checks = check_bounds(&res, &ledger, ek, ew);
    let step = one_step(&problem, &approx, &errors, &frame, &integ, cfg.newton.band_guard)?;
    let step_checks = check_step_bounds(&step, &ledger, ek, ew);
    let identities = res.identities(frame.d);
    let report = DiagnosticsReport {
        norm_ek: ek,
        norm_ew: ew,
        all_identities_hold: identities.iter().all(|i| i.value <= IDENTITY_TOL),
        all_bounds_hold: checks.iter().chain(&step_checks).all(|c| c.holds),
        identities,
        bounds: checks,
        step_bounds: step_checks,
        avg_eta3: res.avg_eta3.clone(),
        reduction_residual: res.reduction.max_abs(),
        unstable_residual: res.unstable.max_abs(),
    };
    write_json(&dir.join("diagnostics.json"), &report)?;
    Ok(report)
}

fn bounds_path(cfg: &RunConfig, dir: &Path) -> PathBuf {
    cfg.certificate.bounds_file.clone().unwrap_or_else(|| dir.join("bounds.json"))
}

/// Certificate from `measured.json` and the bounds file.
pub fn cmd_certify(cfg: &RunConfig, dir: &Path) -> Result<Certificate> {
    let measured: Measurements = read_json(&dir.join("measured.json"))?;
    let bounds: HypothesisBounds = read_json(&bounds_path(cfg, dir))?;
    let cert = certify(&bounds, &measured.norms)?;
    write_json(&dir.join("certificate.json"), &cert)?;
    Ok(cert)
}

/// Process exit code for an error: 2 for configuration and input problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Format(_) | Error::Io(_) => 2,
        _ => 1,
    }
}
