//! Geometric residuals of an approximately invariant torus and its frame, the
//! measured norms and constants that feed the ledger, and the one-sided bound checks.

use crate::dynamics::{flow_jet, standard_omega, Geometry, Hamiltonian, IntegratorOptions, JetOrder};
use crate::error::{Error, Result};
use crate::fourier::{FourierSeries, GridField};
use crate::frames::{along, rotate_field, Frame};
use crate::ledger::{ConstantsLedger, HypothesisBounds, MeasuredNorms};
use crate::newton::{
    bundle_residual, bundle_step, compute_errors, max_row_sum, project, torus_step, Approximation,
    BundleResidual, InvarianceErrors, Problem,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Every residual of the frame, sampled on the grid.
#[derive(Debug, Clone)]
pub struct Residuals {
    /// `Dφ_T L − (L∘R) Λ`.
    pub e_l: GridField,
    /// `(D_θE_K | ΔX − D_φE_K α̂ | E_W)`, which must agree with `e_l`.
    pub e_l_blocks: GridField,
    /// `(D_θK)^T Ω∘K D_θK`.
    pub omega_dk: GridField,
    /// `L^T Ω∘K L`.
    pub omega_l: GridField,
    pub e_sym_hat: GridField,
    pub e_red_hat: GridField,
    /// `P̂ (−Ω₀ P̂^T Ω∘K) − I`.
    pub e_inv_hat: GridField,
    /// `Λ⁻¹Ŝ − (Λ⁻¹Ŝ)^T`.
    pub e_sym_torsion: GridField,
    /// `A − A^T`.
    pub e_sym_a: GridField,
    pub e_sym: GridField,
    pub e_red: GridField,
    /// `(P∘R)⁻¹ Dφ_T P` minus its reduced block form.
    pub reduction: GridField,
    /// `Dφ_T W̃ − (W̃∘R) λ⁻¹`.
    pub unstable: GridField,
    /// Average of the third projected block of `E_K`.
    pub avg_eta3: Vec<f64>,
}

/// `diag(I_{n−1}, value)`.
fn last_diag(grid: &crate::fourier::GridSpec, n: usize, value: f64) -> GridField {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v[n * n - 1] = value;
    GridField::constant(grid, n, n, &v)
}

/// `[[a, b], [0, c]]` from `n × n` blocks.
fn upper_blocks(a: &GridField, b: &GridField, c: &GridField) -> GridField {
    let n = a.rows();
    let mut out = GridField::zeros(a.grid(), 2 * n, 2 * n);
    out.set_block(0, 0, a);
    out.set_block(0, n, b);
    out.set_block(n, n, c);
    out
}

/// `X(z, φ + α)` along a field of points, phases shifted by the rotation.
fn field_shifted(system: &dyn Hamiltonian, z: &GridField, shift: &[f64]) -> GridField {
    let m = system.phase_dim();
    let grid = z.grid();
    let d = grid.d();
    let mut out = GridField::zeros(grid, m, 1);
    let mut buf = vec![0.0; m];
    for node in 0..z.nodes() {
        let phi: Vec<f64> = grid.node(node)[d..]
            .iter()
            .zip(&shift[d..])
            .map(|(p, s)| p + s)
            .collect();
        system.field(&z.at_node(node), &phi, &mut buf);
        out.set_node(node, &buf);
    }
    out
}

pub fn residuals(
    problem: &Problem,
    approx: &Approximation,
    errors: &InvarianceErrors,
    frame: &Frame,
) -> Result<Residuals> {
    let n = frame.n;
    let m = 2 * n;
    let d = frame.d;
    let grid = approx.k.grid().clone();
    let shift = problem.dio.shift();
    let geo = problem.geometry;
    let kv = approx.k.to_field();
    let kr = approx.k.rotate(&shift)?.to_field();
    let om = along(&kv, m, m, |z, o| geo.omega(z, o));
    let om_r = along(&kr, m, m, |z, o| geo.omega(z, o));
    let om0 = GridField::constant(&grid, m, m, &standard_omega(n));
    let lam = last_diag(&grid, n, approx.lambda);
    let lam_inv_t = last_diag(&grid, n, 1.0 / approx.lambda);
    let dflow = &errors.dflow;

    let l_r = rotate_field(&frame.l, &shift)?;
    let e_l = dflow.matmul(&frame.l)?.sub(&l_r.matmul(&lam)?)?;

    let ek = errors.ek.to_field();
    let alpha_hat = GridField::constant(&grid, grid.ell(), 1, problem.system.alpha_hat());
    let moved = field_shifted(problem.system, &kr.add(&ek)?, &shift);
    let base = field_shifted(problem.system, &kr, &shift);
    let dphi_ek = errors.ek.jacobian(d..grid.dims())?.to_field();
    let e_x = moved.sub(&base)?.sub(&dphi_ek.matmul(&alpha_hat)?)?;
    let ew = errors.ew.to_field();
    let e_l_blocks = if d > 0 {
        let dtheta_ek = errors.ek.jacobian(0..d)?.to_field();
        GridField::hcat(&[&dtheta_ek, &e_x, &ew])?
    } else {
        GridField::hcat(&[&e_x, &ew])?
    };

    let dtheta = frame.dtheta_k.to_field();
    let omega_dk = dtheta.transpose().matmul(&om)?.matmul(&dtheta)?;
    let omega_l = frame.l.transpose().matmul(&om)?.matmul(&frame.l)?;

    let p_hat = &frame.p_hat;
    let e_sym_hat = p_hat.transpose().matmul(&om)?.matmul(p_hat)?.sub(&om0)?;
    let p_hat_r = rotate_field(p_hat, &shift)?;
    let twisted = |pr: &GridField, p: &GridField| -> Result<GridField> {
        Ok(om0.matmul(&pr.transpose())?.matmul(&om_r)?.matmul(dflow)?.matmul(p)?.scale(-1.0))
    };
    let e_red_hat = twisted(&p_hat_r, p_hat)?.sub(&upper_blocks(&lam, &frame.s_hat, &lam_inv_t))?;
    let ident = GridField::identity(&grid, m);
    let e_inv_hat = p_hat
        .matmul(&om0.matmul(&p_hat.transpose())?.matmul(&om)?.scale(-1.0))?
        .sub(&ident)?;

    let torsion = last_diag(&grid, n, 1.0 / approx.lambda).matmul(&frame.s_hat)?;
    let e_sym_torsion = torsion.sub(&torsion.transpose())?;
    let e_sym_a = frame.a.sub(&frame.a.transpose())?;

    let p = &frame.p;
    let e_sym = p.transpose().matmul(&om)?.matmul(p)?.sub(&om0)?;
    let mut s_tilde = GridField::zeros(&grid, n, n);
    s_tilde.set_block(0, 0, &frame.s);
    let reduced_form = upper_blocks(&lam, &s_tilde, &lam_inv_t);
    let p_r = rotate_field(p, &shift)?;
    let e_red = twisted(&p_r, p)?.sub(&reduced_form)?;
    let reduction = p_r
        .inverse(crate::frames::MAX_CONDITION)?
        .matmul(dflow)?
        .matmul(p)?
        .sub(&reduced_form)?;
    let wt_r = rotate_field(&frame.w_tilde, &shift)?;
    let unstable = dflow.matmul(&frame.w_tilde)?.sub(&wt_r.scale(1.0 / approx.lambda))?;

    let avg_eta3 = project(problem, frame, &approx.k, &errors.ek)?.eta3.average();
    Ok(Residuals {
        e_l,
        e_l_blocks,
        omega_dk,
        omega_l,
        e_sym_hat,
        e_red_hat,
        e_inv_hat,
        e_sym_torsion,
        e_sym_a,
        e_sym,
        e_red,
        reduction,
        unstable,
        avg_eta3,
    })
}

/// A quantity that must vanish up to round-off.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub value: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

impl Residuals {
    /// Structural identities: exact-zero blocks, zero averages and the two ways of computing `E_L`.
    pub fn identities(&self, d: usize) -> Vec<IdentityCheck> {
        let n = self.omega_l.rows();
        let mut out = vec![
            IdentityCheck {
                name: "E_L direct minus block form".into(),
                value: self.e_l.sub(&self.e_l_blocks).map(|f| f.max_abs()).unwrap_or(f64::INFINITY),
            },
            IdentityCheck {
                name: "hat E_red block 12".into(),
                value: self.e_red_hat.block(0, n, n, 2 * n).max_abs(),
            },
            IdentityCheck {
                name: "Omega_W".into(),
                value: self.omega_l.block(n - 1, n, n - 1, n).max_abs(),
            },
            IdentityCheck {
                name: "Omega_X".into(),
                value: self.omega_l.block(d, d + 1, d, d + 1).max_abs(),
            },
            IdentityCheck {
                name: "hat E_sym block form".into(),
                value: self.hat_sym_block_defect(),
            },
        ];
        if d > 0 {
            out.push(IdentityCheck {
                name: "average Omega_DK".into(),
                value: max_abs(&self.omega_dk.to_series().average()),
            });
            out.push(IdentityCheck {
                name: "average Omega_DKX".into(),
                value: max_abs(&self.omega_l.block(0, d, d, d + 1).to_series().average()),
            });
        }
        out
    }

    /// Distance of `Ê_sym` from `[[Ω_L, 0], [0, B^T Ω_L B]]` given the frame's `B`.
    fn hat_sym_block_defect(&self) -> f64 {
        let n = self.omega_l.rows();
        let top = self.e_sym_hat.block(0, n, 0, n).sub(&self.omega_l).map(|f| f.max_abs());
        let off = self
            .e_sym_hat
            .block(0, n, n, 2 * n)
            .max_abs()
            .max(self.e_sym_hat.block(n, 2 * n, 0, n).max_abs());
        top.unwrap_or(f64::INFINITY).max(off)
    }
}

/// A one-sided inequality `norm ≤ bound` at a given radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub radius: f64,
    pub norm: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(name: &str, radius: f64, norm: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            radius,
            norm,
            bound,
            holds: norm <= bound,
        }
    }
}

fn norm(f: &GridField, radius: f64) -> f64 {
    f.to_series().strip_norm(radius)
}

/// Scales shared by the estimates: `γδ^τ` and the error norms at `ρ`.
struct Scales {
    rho: f64,
    delta: f64,
    gd: f64,
    ek: f64,
    ew: f64,
}

impl Scales {
    fn new(ledger: &ConstantsLedger, ek: f64, ew: f64) -> Self {
        Self {
            rho: ledger.get("rho"),
            delta: ledger.get("delta"),
            gd: ledger.get("gd"),
            ek,
            ew,
        }
    }

    /// `C_K ‖E_K‖/(γδ^{τ+1}) + C_W ‖E_W‖`.
    fn linear(&self, ledger: &ConstantsLedger, k: &str, w: &str) -> f64 {
        ledger.get(k) * self.ek / (self.gd * self.delta) + ledger.get(w) * self.ew
    }
}

/// Geometric estimates with the ledger's constants. `ek`, `ew` are the error norms at `ρ`.
pub fn check_bounds(res: &Residuals, ledger: &ConstantsLedger, ek: f64, ew: f64) -> Vec<BoundCheck> {
    let s = Scales::new(ledger, ek, ew);
    let (r1, r2) = (s.rho - s.delta, s.rho - 2.0 * s.delta);
    let mut out = vec![BoundCheck::new(
        "E_L",
        r1,
        norm(&res.e_l_blocks, r1),
        ledger.get("C_EL_K") / s.delta * ek + ledger.get("C_EL_W") * ew,
    )];
    if res.omega_dk.rows() > 0 {
        out.push(BoundCheck::new(
            "Omega_DK",
            r1,
            norm(&res.omega_dk, r1),
            ledger.get("C_OmDK") * ek / (s.gd * s.delta),
        ));
    }
    let pairs = [
        ("Omega_L", &res.omega_l, "C_OmL_K", "C_OmL_W"),
        ("hat E_sym", &res.e_sym_hat, "C_hEsym_K", "C_hEsym_W"),
        ("hat E_red", &res.e_red_hat, "C_hEred_K", "C_hEred_W"),
        ("E_inv hat P", &res.e_inv_hat, "C_EinvhP_K", "C_EinvhP_W"),
        ("torsion symmetry", &res.e_sym_torsion, "C_invLahS_K", "C_invLahS_W"),
        ("A symmetry", &res.e_sym_a, "C_EsymA_K", "C_EsymA_W"),
        ("E_sym", &res.e_sym, "C_Esym_K", "C_Esym_W"),
        ("E_red", &res.e_red, "C_Ered_K", "C_Ered_W"),
    ];
    for (name, field, k, w) in pairs {
        out.push(BoundCheck::new(name, r2, norm(field, r2), s.linear(ledger, k, w)));
    }
    let avg: f64 = res.avg_eta3.iter().map(|v| v.abs()).sum();
    out.push(BoundCheck::new(
        "average eta3",
        s.rho,
        avg,
        ledger.get("C_avg_eta3") / s.delta * ek * ek,
    ));
    out
}

/// Outcome of one torus-and-bundle correction from the current approximation.
#[derive(Debug, Clone)]
pub struct OneStep {
    pub delta_k: FourierSeries,
    pub delta_w: FourierSeries,
    pub delta_lambda: f64,
    pub new_errors: InvarianceErrors,
}

pub fn one_step(
    problem: &Problem,
    approx: &Approximation,
    errors: &InvarianceErrors,
    frame: &Frame,
    integ: &IntegratorOptions,
    guard: usize,
) -> Result<OneStep> {
    let ts = torus_step(problem, frame, &approx.k, &errors.ek, approx.lambda, guard)?;
    let ewt = bundle_residual(problem, approx, &errors.ew, &ts.delta_k, BundleResidual::default(), integ)?;
    let bs = bundle_step(problem, frame, &approx.k, &ewt, approx.lambda, guard)?;
    let next = Approximation {
        k: approx.k.add(&ts.delta_k)?,
        w: approx.w.add(&bs.delta_w)?,
        lambda: approx.lambda + bs.delta_lambda,
    };
    let new_errors = compute_errors(problem, &next, integ)?;
    Ok(OneStep {
        delta_k: ts.delta_k,
        delta_w: bs.delta_w,
        delta_lambda: bs.delta_lambda,
        new_errors,
    })
}

/// Newton-step estimates: the corrections and the new errors against the ledger.
pub fn check_step_bounds(step: &OneStep, ledger: &ConstantsLedger, ek: f64, ew: f64) -> Vec<BoundCheck> {
    let s = Scales::new(ledger, ek, ew);
    let gd = s.gd;
    let (r2, r3) = (s.rho - 2.0 * s.delta, s.rho - 3.0 * s.delta);
    vec![
        BoundCheck::new(
            "Delta K",
            r2,
            step.delta_k.strip_norm(r2),
            ledger.get("C_DeK") / gd.powi(2) * ek,
        ),
        BoundCheck::new(
            "Delta W",
            r3,
            step.delta_w.strip_norm(r3),
            ledger.get("C_DeW_K") / gd.powi(3) * ek + ledger.get("C_DeW_W") / gd * ew,
        ),
        BoundCheck::new(
            "Delta lambda",
            0.0,
            step.delta_lambda.abs(),
            ledger.get("C_Dela_K") / gd.powi(2) * ek + ledger.get("C_Dela_W") * ew,
        ),
        BoundCheck::new(
            "new E_K",
            r2,
            step.new_errors.ek.strip_norm(r2),
            ledger.get("C_EK_KK") / gd.powi(4) * ek * ek + ledger.get("C_EK_KW") / gd.powi(2) * ek * ew,
        ),
        BoundCheck::new(
            "new E_W",
            r3,
            step.new_errors.ew.strip_norm(r3),
            ledger.get("C_EW_KK") / gd.powi(5) * ek * ek
                + ledger.get("C_EW_WW") / gd * ew * ew
                + ledger.get("C_EW_KW") / gd.powi(3) * ek * ew,
        ),
    ]
}

/// Result of the perturbed-inverse lemma for `M̄` near `M`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseCheck {
    /// `σ² |M̄ − M| / (σ − |M⁻¹|)`; the lemma applies when this is below one.
    pub lhs: f64,
    pub applies: bool,
    /// `σ² |M̄ − M|`, the certified bound on `|M̄⁻¹ − M⁻¹|`.
    pub bound: f64,
}

fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Norms are max row sums.
pub fn perturbed_inverse_check(m: &DMatrix<f64>, mbar: &DMatrix<f64>, sigma: f64) -> Result<InverseCheck> {
    if m.shape() != mbar.shape() || !m.is_square() {
        return Err(Error::Shape("perturbed inverse needs two square matrices of equal size".into()));
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Hypothesis("M is singular".into()))?;
    let inv_norm = row_sum_norm(&inv);
    if sigma <= inv_norm {
        return Err(Error::Hypothesis(format!(
            "sigma = {sigma} must exceed |M^-1| = {inv_norm}"
        )));
    }
    let gap = row_sum_norm(&(mbar - m));
    let lhs = sigma * sigma * gap / (sigma - inv_norm);
    Ok(InverseCheck {
        lhs,
        applies: lhs < 1.0,
        bound: sigma * sigma * gap,
    })
}

/// Norms of the current objects at radius `rho`.
pub fn measure_norms(
    problem: &Problem,
    approx: &Approximation,
    errors: &InvarianceErrors,
    frame: &Frame,
    k0: Option<&FourierSeries>,
    rho: f64,
) -> Result<MeasuredNorms> {
    let n = frame.n;
    let t = |s: &FourierSeries| s.transpose().strip_norm(rho);
    let nf = |f: &GridField| f.to_series().strip_norm(rho);
    let k_minus_k0 = match k0 {
        Some(k0) => approx.k.sub(k0)?.strip_norm(rho),
        None => 0.0,
    };
    Ok(MeasuredNorms {
        n,
        d: frame.d,
        ell: approx.k.grid().ell(),
        alpha_hat: problem.system.alpha_hat().to_vec(),
        dtheta_k: frame.dtheta_k.strip_norm(rho),
        dtheta_k_t: t(&frame.dtheta_k),
        dphi_k: frame.dphi_k.strip_norm(rho),
        dphi_k_t: t(&frame.dphi_k),
        w: approx.w.strip_norm(rho),
        w_t: t(&approx.w),
        n0: nf(&frame.n0),
        n0_t: nf(&frame.n0.transpose()),
        b: nf(&frame.b),
        inv_avg_s: max_row_sum(&frame.avg_s_inv, n - 1, n - 1),
        lambda: approx.lambda,
        k_minus_k0,
        ek: errors.ek.strip_norm(rho),
        ew: errors.ew.strip_norm(rho),
    })
}

/// Measured sizes of the geometry, the field and the flow along `K` (no margin applied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredConstants {
    pub omega: f64,
    pub d_omega: f64,
    pub da: f64,
    pub da_t: f64,
    pub d2a: f64,
    pub j: f64,
    pub j_t: f64,
    pub dj: f64,
    pub dj_t: f64,
    pub g: f64,
    pub dg: f64,
    pub x: f64,
    pub x_t: f64,
    pub dzx: f64,
    pub dzx_t: f64,
    pub d2h: f64,
    pub dphi: f64,
    pub dphi_t: f64,
    pub d2phi: f64,
}

/// Sup over the grid of `max_i Σ_{u,v} |T_{iuv}|` for `T = D_z F` by central differences.
fn derivative_size(k: &GridField, m: usize, f: impl Fn(&[f64], &mut [f64])) -> (f64, f64) {
    let h = 1e-6;
    let (mut best, mut best_t) = (0.0f64, 0.0f64);
    let mut plus = vec![0.0; m * m];
    let mut minus = vec![0.0; m * m];
    for node in 0..k.nodes() {
        let z = k.at_node(node);
        let mut sums = vec![0.0; m];
        let mut sums_t = vec![0.0; m];
        for u in 0..m {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[u] += h;
            zm[u] -= h;
            f(&zp, &mut plus);
            f(&zm, &mut minus);
            for i in 0..m {
                for v in 0..m {
                    let dv = ((plus[i * m + v] - minus[i * m + v]) / (2.0 * h)).abs();
                    sums[i] += dv;
                    sums_t[v] += dv;
                }
            }
        }
        best = best.max(max_abs(&sums));
        best_t = best_t.max(max_abs(&sums_t));
    }
    (best, best_t)
}

/// `max_i Σ_{u,v} |D²φ_T[i][u][v]|` over every `stride`-th node of the grid.
pub fn second_flow_derivative(
    system: &dyn Hamiltonian,
    k: &GridField,
    period: f64,
    stride: usize,
    opts: &IntegratorOptions,
) -> Result<f64> {
    let grid = k.grid();
    let m = system.phase_dim();
    let mut best: f64 = 0.0;
    for node in (0..k.nodes()).step_by(stride.max(1)) {
        let phi = &grid.node(node)[grid.d()..];
        let jet = flow_jet(system, &k.at_node(node), phi, period, JetOrder::Second, opts)?;
        let t = jet.d2phi.expect("second-order jet");
        for i in 0..m {
            let s: f64 = t[i * m * m..(i + 1) * m * m].iter().map(|v| v.abs()).sum();
            best = best.max(s);
        }
    }
    Ok(best)
}

pub fn measure_constants(
    problem: &Problem,
    approx: &Approximation,
    errors: &InvarianceErrors,
    rho: f64,
    d2phi: f64,
) -> MeasuredConstants {
    let sys = problem.system;
    let geo: &dyn Geometry = problem.geometry;
    let m = sys.phase_dim();
    let kv = approx.k.to_field();
    let grid = kv.grid().clone();
    let d = grid.d();
    let sn = |f: &GridField| f.to_series().strip_norm(rho);
    let pair = |f: &GridField| (sn(f), sn(&f.transpose()));
    let with_phase = |f: &dyn Fn(&[f64], &[f64], &mut [f64]), rows: usize, cols: usize| {
        let mut out = GridField::zeros(&grid, rows, cols);
        let mut buf = vec![0.0; rows * cols];
        for node in 0..kv.nodes() {
            f(&kv.at_node(node), &grid.node(node)[d..], &mut buf);
            out.set_node(node, &buf);
        }
        out
    };
    let omega = along(&kv, m, m, |z, o| geo.omega(z, o));
    let da = along(&kv, m, m, |z, o| geo.action_jacobian(z, o));
    let j = along(&kv, m, m, |z, o| geo.complex_structure(z, o));
    let g = along(&kv, m, m, |z, o| geo.metric(z, o));
    let (d_omega, d2a, dj, dj_t, dg) = if geo.is_constant() {
        (0.0, 0.0, 0.0, 0.0, 0.0)
    } else {
        let (d_omega, _) = derivative_size(&kv, m, |z, o| geo.omega(z, o));
        let (d2a, _) = derivative_size(&kv, m, |z, o| geo.action_jacobian(z, o));
        let (dj, dj_t) = derivative_size(&kv, m, |z, o| geo.complex_structure(z, o));
        let (dg, _) = derivative_size(&kv, m, |z, o| geo.metric(z, o));
        (d_omega, d2a, dj, dj_t, dg)
    };
    let x = with_phase(&|z, p, o| sys.field(z, p, o), m, 1);
    let dzx = with_phase(&|z, p, o| sys.jacobian(z, p, o), m, m);
    let d2h = with_phase(&|z, p, o| sys.hessian(z, p, o), m, m);
    let (da, da_t) = pair(&da);
    let (j, j_t) = pair(&j);
    let (x, x_t) = pair(&x);
    let (dzx, dzx_t) = pair(&dzx);
    let (dphi, dphi_t) = pair(&errors.dflow);
    MeasuredConstants {
        omega: sn(&omega),
        d_omega,
        da,
        da_t,
        d2a,
        j,
        j_t,
        dj,
        dj_t,
        g: sn(&g),
        dg,
        x,
        x_t,
        dzx,
        dzx_t,
        d2h: sn(&d2h),
        dphi,
        dphi_t,
        d2phi,
    }
}

/// Analyticity and Diophantine data of the domain hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainData {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub rho: f64,
    pub rho_inf: f64,
    pub delta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub c_r: f64,
}

/// Bounds at `margin` times each measured value, plus a tiny offset so zero norms
/// still get a strictly larger bound.
pub fn bounds_from_measurements(
    c: &MeasuredConstants,
    m: &MeasuredNorms,
    domain: &DomainData,
    margin: f64,
) -> HypothesisBounds {
    let up = |v: f64| margin * v + 1e-8;
    HypothesisBounds {
        c_omega: up(c.omega),
        c_d_omega: up(c.d_omega),
        c_da: up(c.da),
        c_da_t: up(c.da_t),
        c_d2a: up(c.d2a),
        c_j: up(c.j),
        c_j_t: up(c.j_t),
        c_dj: up(c.dj),
        c_dj_t: up(c.dj_t),
        c_g: up(c.g),
        c_dg: up(c.dg),
        c_x: up(c.x),
        c_x_t: up(c.x_t),
        c_dzx: up(c.dzx),
        c_dzx_t: up(c.dzx_t),
        c_d2h: up(c.d2h),
        c_dphi: up(c.dphi),
        c_dphi_t: up(c.dphi_t),
        c_d2phi: up(c.d2phi),
        sigma_dtheta_k: up(m.dtheta_k),
        sigma_dtheta_k_t: up(m.dtheta_k_t),
        sigma_dphi_k: up(m.dphi_k),
        sigma_dphi_k_t: up(m.dphi_k_t),
        sigma_w: up(m.w),
        sigma_w_t: up(m.w_t),
        sigma_n0: up(m.n0),
        sigma_n0_t: up(m.n0_t),
        sigma_b: up(m.b),
        sigma_lambda: up(m.lambda.abs()),
        sigma_inv_lambda: up(1.0 / m.lambda.abs()),
        sigma_inv_avg_s: up(m.inv_avg_s),
        r: domain.r,
        big_r: domain.big_r,
        rho: domain.rho,
        rho_inf: domain.rho_inf,
        delta: domain.delta,
        gamma: domain.gamma,
        tau: domain.tau,
        c_r: domain.c_r,
    }
}
