//! Named constants of the convergence argument, evaluated from hypothesis bounds,
//! measured norms and the current invariance errors.
//!
//! Every constant is a pure formula over previously defined names. Evaluation repeatedly
//! sweeps the pending formulas and computes those whose inputs are available, so the
//! result does not depend on the order in which formulas are visited.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Bounds on the geometry, the vector field and the flow (`c_*`), on the
/// parameterizations (`sigma_*`) and the analyticity/Diophantine data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisBounds {
    pub c_omega: f64,
    pub c_d_omega: f64,
    pub c_da: f64,
    pub c_da_t: f64,
    pub c_d2a: f64,
    pub c_j: f64,
    pub c_j_t: f64,
    pub c_dj: f64,
    pub c_dj_t: f64,
    pub c_g: f64,
    pub c_dg: f64,
    pub c_x: f64,
    pub c_x_t: f64,
    pub c_dzx: f64,
    pub c_dzx_t: f64,
    pub c_d2h: f64,
    pub c_dphi: f64,
    pub c_dphi_t: f64,
    pub c_d2phi: f64,
    pub sigma_dtheta_k: f64,
    pub sigma_dtheta_k_t: f64,
    pub sigma_dphi_k: f64,
    pub sigma_dphi_k_t: f64,
    pub sigma_w: f64,
    pub sigma_w_t: f64,
    pub sigma_n0: f64,
    pub sigma_n0_t: f64,
    pub sigma_b: f64,
    pub sigma_lambda: f64,
    pub sigma_inv_lambda: f64,
    pub sigma_inv_avg_s: f64,
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

/// Norms of the current objects at radius `rho` (max row sum of weighted ℓ1 norms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredNorms {
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub alpha_hat: Vec<f64>,
    pub dtheta_k: f64,
    pub dtheta_k_t: f64,
    pub dphi_k: f64,
    pub dphi_k_t: f64,
    pub w: f64,
    pub w_t: f64,
    pub n0: f64,
    pub n0_t: f64,
    pub b: f64,
    pub inv_avg_s: f64,
    pub lambda: f64,
    /// `‖K − K₀‖_ρ` against the reference torus of the domain hypothesis.
    pub k_minus_k0: f64,
    pub ek: f64,
    pub ew: f64,
}

impl MeasuredNorms {
    /// Same objects with the invariance errors multiplied by `factor`.
    pub fn with_scaled_errors(&self, factor: f64) -> Self {
        Self {
            ek: self.ek * factor,
            ew: self.ew * factor,
            ..self.clone()
        }
    }
}

impl HypothesisBounds {
    /// Every `sigma` must strictly exceed the measured norm it bounds.
    pub fn check_against(&self, m: &MeasuredNorms) -> Result<()> {
        let pairs = [
            ("sigma_dtheta_k", self.sigma_dtheta_k, m.dtheta_k),
            ("sigma_dtheta_k_t", self.sigma_dtheta_k_t, m.dtheta_k_t),
            ("sigma_dphi_k", self.sigma_dphi_k, m.dphi_k),
            ("sigma_dphi_k_t", self.sigma_dphi_k_t, m.dphi_k_t),
            ("sigma_w", self.sigma_w, m.w),
            ("sigma_w_t", self.sigma_w_t, m.w_t),
            ("sigma_n0", self.sigma_n0, m.n0),
            ("sigma_n0_t", self.sigma_n0_t, m.n0_t),
            ("sigma_b", self.sigma_b, m.b),
            ("sigma_lambda", self.sigma_lambda, m.lambda.abs()),
            ("sigma_inv_lambda", self.sigma_inv_lambda, 1.0 / m.lambda.abs()),
            ("sigma_inv_avg_s", self.sigma_inv_avg_s, m.inv_avg_s),
        ];
        let bad: Vec<String> = pairs
            .iter()
            .filter(|(_, s, v)| !(s > v) || !s.is_finite())
            .map(|(name, s, v)| format!("{name} = {s} does not exceed {v}"))
            .collect();
        if !bad.is_empty() {
            return Err(Error::Hypothesis(bad.join("; ")));
        }
        if self.sigma_lambda >= 1.0 || self.sigma_inv_lambda <= 1.0 {
            return Err(Error::Hypothesis(
                "need sigma_lambda < 1 < sigma_inv_lambda".into(),
            ));
        }
        if !(self.rho > self.rho_inf && self.rho_inf > 0.0 && self.rho < self.r) {
            return Err(Error::Hypothesis("need 0 < rho_inf < rho < r".into()));
        }
        if !(self.delta > 0.0 && 3.0 * self.delta < self.rho - self.rho_inf) {
            return Err(Error::Hypothesis("need 0 < 3 delta < rho - rho_inf".into()));
        }
        if !(self.gamma > 0.0 && self.tau > 0.0 && self.c_r > 0.0 && self.big_r > 0.0) {
            return Err(Error::Hypothesis("gamma, tau, c_R and R must be positive".into()));
        }
        let h1 = [
            self.c_omega, self.c_d_omega, self.c_da, self.c_da_t, self.c_d2a, self.c_j,
            self.c_j_t, self.c_dj, self.c_dj_t, self.c_g, self.c_dg, self.c_x, self.c_x_t,
            self.c_dzx, self.c_dzx_t, self.c_d2h, self.c_dphi, self.c_dphi_t, self.c_d2phi,
        ];
        if h1.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Hypothesis("H1 constants must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Lookup over already evaluated names.
pub struct Env<'a> {
    values: &'a BTreeMap<&'static str, f64>,
}

impl Env<'_> {
    pub fn v(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

pub struct Formula {
    pub symbol: &'static str,
    /// Group of the compendium the constant belongs to (1–7).
    pub table: u8,
    pub eval: fn(&Env) -> Option<f64>,
}

/// `num / den`, or `+∞` when the denominator is not positive.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

fn max(vals: &[f64]) -> f64 {
    vals.iter().copied().fold(0.0, f64::max)
}

macro_rules! formulas {
    ($( $table:literal $sym:literal => |$e:ident| $body:expr ;)*) => {
        vec![$( Formula { symbol: $sym, table: $table, eval: |$e: &Env| Some($body) } ),*]
    };
}

/// All formulas, in the order they are listed in the compendium.
pub fn formulas() -> Vec<Formula> {
    formulas! {
        // Frame bounds.
        1 "C_cX" => |e| e.v("c_X")? + e.v("sigma_DphiK")? * e.v("abs_alpha_hat")?;
        1 "C_cXT" => |e| e.v("c_XT")? + e.v("abs_alpha_hat_T")? * e.v("sigma_DphiKT")?;
        1 "C_L" => |e| e.v("sigma_DthetaK")? + e.v("C_cX")? + e.v("sigma_W")?;
        1 "C_LT" => |e| max(&[e.v("sigma_DthetaKT")?, e.v("C_cXT")?, e.v("sigma_WT")?]);
        1 "C_hP" => |e| e.v("C_L")? + e.v("sigma_N0")?;
        1 "C_hPT" => |e| e.v("C_LT")?.max(e.v("sigma_N0T")?);
        1 "C_hS" => |e| e.v("sigma_N0T")? * e.v("c_Omega")? * e.v("c_Dphi")? * e.v("sigma_N0")?;
        1 "C_hST" => |e| e.v("sigma_N0T")? * e.v("c_Omega")? * e.v("c_DphiT")? * e.v("sigma_N0")?;
        1 "C_A" => |e| {
            let sl = e.v("sigma_lambda")?;
            ratio(e.v("C_hS")? * sl + e.v("C_hST")?, 1.0 - sl * sl)
        };
        1 "C_AT" => |e| {
            let sl = e.v("sigma_lambda")?;
            ratio(e.v("C_hST")? * sl + e.v("C_hS")?, 1.0 - sl * sl)
        };
        1 "C_N" => |e| e.v("sigma_N0")? + e.v("C_L")? * e.v("C_A")?;
        1 "C_NT" => |e| e.v("sigma_N0T")? + e.v("C_AT")? * e.v("C_LT")?;
        1 "C_P" => |e| e.v("C_L")? + e.v("C_N")?;
        1 "C_PT" => |e| e.v("C_LT")?.max(e.v("C_NT")?);

        // Subframe invariance, isotropy and Lagrangianity.
        2 "C_EcX" => |e| e.v("c_DzX")? * e.v("delta")? + e.v("ell")? * e.v("abs_alpha_hat")?;
        2 "C_EcXT" => |e| 2.0 * e.v("n")? * (e.v("c_DzXT")? * e.v("delta")? + e.v("abs_alpha_hat_T")?);
        2 "C_EL_K" => |e| e.v("d")? + e.v("C_EcX")?;
        2 "C_EL_W" => |_e| 1.0;
        2 "C_ELT_K" => |e| (2.0 * e.v("n")?).max(e.v("C_EcXT")?);
        2 "C_ELT_W" => |e| 2.0 * e.v("n")?;
        2 "C_LieOmDK" => |e| {
            let (st, s) = (e.v("sigma_DthetaKT")?, e.v("sigma_DthetaK")?);
            st * e.v("c_DOmega")? * s * e.v("delta")? + st * e.v("c_Omega")? * e.v("d")?
                + 2.0 * e.v("n")? * e.v("c_Omega")? * e.v("c_Dphi")? * s
        };
        2 "C_Lie_a1" => |e| {
            let (st, cx) = (e.v("sigma_DthetaKT")?, e.v("C_cX")?);
            st * e.v("c_DOmega")? * cx * e.v("delta")? + st * e.v("c_Omega")? * e.v("C_EcX")?
                + 2.0 * e.v("n")? * e.v("c_Omega")? * e.v("c_Dphi")? * cx
        };
        2 "C_Lie_a2_K" => |e| {
            let sw = e.v("sigma_W")?;
            e.v("sigma_DthetaKT")? * e.v("c_DOmega")? * sw * e.v("sigma_lambda")? * e.v("delta")?
                + 2.0 * e.v("n")? * e.v("c_Omega")? * e.v("c_Dphi")? * sw
        };
        2 "C_Lie_a2_W" => |e| e.v("sigma_DthetaKT")? * e.v("c_Omega")?;
        2 "C_Lie_a3" => |e| {
            let cxt = e.v("C_cXT")?;
            cxt * e.v("c_DOmega")? * e.v("sigma_DthetaK")? * e.v("delta")? + cxt * e.v("c_Omega")? * e.v("d")?
                + e.v("C_EcXT")? * e.v("c_Omega")? * e.v("c_Dphi")? * e.v("sigma_DthetaK")?
        };
        2 "C_Lie_a5_K" => |e| {
            e.v("C_cXT")? * e.v("c_DOmega")? * e.v("sigma_W")? * e.v("sigma_lambda")? * e.v("delta")?
                + e.v("C_EcXT")? * e.v("c_Omega")? * e.v("c_Dphi")? * e.v("sigma_W")?
        };
        2 "C_Lie_a5_W" => |e| e.v("C_cXT")? * e.v("c_Omega")?;
        2 "C_Lie_a6_K" => |e| {
            let lw = e.v("sigma_lambda")? * e.v("sigma_WT")?;
            lw * e.v("c_DOmega")? * e.v("sigma_DthetaK")? * e.v("delta")? + lw * e.v("c_Omega")? * e.v("d")?
        };
        2 "C_Lie_a6_W" => |e| 2.0 * e.v("n")? * e.v("c_Omega")? * e.v("c_Dphi")? * e.v("sigma_DthetaK")?;
        2 "C_Lie_a7_K" => |e| {
            let lw = e.v("sigma_lambda")? * e.v("sigma_WT")?;
            lw * e.v("c_DOmega")? * e.v("C_cX")? * e.v("delta")? + lw * e.v("c_Omega")? * e.v("C_EcX")?
        };
        2 "C_Lie_a7_W" => |e| 2.0 * e.v("n")? * e.v("c_Omega")? * e.v("c_Dphi")? * e.v("C_cX")?;
        2 "C_OmDK" => |e| e.v("c_R")? * e.v("C_LieOmDK")?;
        2 "C_a1" => |e| e.v("c_R")? * e.v("C_Lie_a1")?;
        2 "C_a2_K" => |e| ratio(e.v("C_Lie_a2_K")?, 1.0 - e.v("sigma_lambda")?);
        2 "C_a2_W" => |e| ratio(e.v("C_Lie_a2_W")?, 1.0 - e.v("sigma_lambda")?);
        2 "C_a3" => |e| e.v("c_R")? * e.v("C_Lie_a3")?;
        2 "C_a5_K" => |e| ratio(e.v("C_Lie_a5_K")?, 1.0 - e.v("sigma_lambda")?);
        2 "C_a5_W" => |e| ratio(e.v("C_Lie_a5_W")?, 1.0 - e.v("sigma_lambda")?);
        2 "C_a6_K" => |e| ratio(e.v("C_Lie_a6_K")?, 1.0 - e.v("sigma_lambda")?);
        2 "C_a6_W" => |e| ratio(e.v("C_Lie_a6_W")?, 1.0 - e.v("sigma_lambda")?);
        2 "C_a7_K" => |e| ratio(e.v("C_Lie_a7_K")?, 1.0 - e.v("sigma_lambda")?);
        2 "C_a7_W" => |e| ratio(e.v("C_Lie_a7_W")?, 1.0 - e.v("sigma_lambda")?);
        2 "C_OmL_K" => |e| {
            let gd = e.v("gd")?;
            max(&[
                e.v("C_OmDK")? + e.v("C_a1")? + e.v("C_a2_K")? * gd,
                e.v("C_a3")? + e.v("C_a5_K")? * gd,
                (e.v("C_a6_K")? + e.v("C_a7_K")?) * gd,
            ])
        };
        2 "C_OmL_W" => |e| max(&[e.v("C_a2_W")?, e.v("C_a5_W")?, e.v("C_a6_W")? + e.v("C_a7_W")?]);

        // Symplecticity, reducibility, invertibility and symmetry errors.
        3 "C_hEsym_K" => |e| e.v("sigma_B")?.powi(2).max(1.0) * e.v("C_OmL_K")?;
        3 "C_hEsym_W" => |e| e.v("sigma_B")?.powi(2).max(1.0) * e.v("C_OmL_W")?;
        3 "C_hEred11_K" => |e| e.v("sigma_N0T")? * e.v("c_Omega")? * e.v("C_EL_K")?;
        3 "C_hEred11_W" => |e| e.v("sigma_N0T")? * e.v("c_Omega")? * e.v("C_EL_W")?;
        3 "C_hEred21_K" => |e| e.v("C_OmL_K")? + e.v("C_LT")? * e.v("c_Omega")? * e.v("C_EL_K")? * e.v("gd")?;
        3 "C_hEred21_W" => |e| e.v("C_OmL_W")? + e.v("C_LT")? * e.v("c_Omega")? * e.v("C_EL_W")?;
        3 "C_hEred22_K" => |e| {
            let tail = e.v("c_Dphi")? * e.v("sigma_N0")?;
            e.v("C_LT")? * e.v("c_DOmega")? * tail * e.v("delta")?
                + e.v("sigma_inv_lambda")? * e.v("C_ELT_K")? * e.v("c_Omega")? * tail
        };
        3 "C_hEred22_W" => |e| {
            e.v("sigma_inv_lambda")? * e.v("C_ELT_W")? * e.v("c_Omega")? * e.v("c_Dphi")? * e.v("sigma_N0")?
        };
        3 "C_hEred_K" => |e| {
            let gd = e.v("gd")?;
            (e.v("C_hEred11_K")? * gd).max(e.v("C_hEred21_K")? + e.v("C_hEred22_K")? * gd)
        };
        3 "C_hEred_W" => |e| e.v("C_hEred11_W")?.max(e.v("C_hEred21_W")? + e.v("C_hEred22_W")?);
        3 "C_EinvhP_K" => |e| {
            ratio(e.v("C_hP")? * e.v("C_hPT")? * e.v("c_Omega")? * e.v("C_hEsym_K")?, 1.0 - e.v("nu_hat")?)
        };
        3 "C_EinvhP_W" => |e| {
            ratio(e.v("C_hP")? * e.v("C_hPT")? * e.v("c_Omega")? * e.v("C_hEsym_W")?, 1.0 - e.v("nu_hat")?)
        };
        3 "C_invLahS_K" => |e| {
            let (gd, dl) = (e.v("gd")?, e.v("delta")?);
            let inner = e.v("C_hS")?
                * (e.v("c_DOmega")? * e.v("C_L")? * dl + e.v("sigma_inv_lambda")? * e.v("c_Omega")? * e.v("C_EL_K")?)
                * gd
                + e.v("c_DOmega")? * e.v("c_Dphi")? * e.v("sigma_N0")? * gd * dl
                + e.v("c_Omega")? * e.v("c_Dphi")? * e.v("sigma_N0")? * e.v("C_EinvhP_K")?
                + e.v("c_Omega")? * e.v("C_hP")? * e.v("C_hEred22_K")? * gd;
            e.v("sigma_B")?.powi(2) * e.v("C_OmL_K")? + e.v("sigma_N0T")? * e.v("c_DphiT")? * inner
        };
        3 "C_invLahS_W" => |e| {
            let inner = e.v("C_hS")? * e.v("sigma_inv_lambda")? * e.v("C_EL_W")?
                + e.v("c_Dphi")? * e.v("sigma_N0")? * e.v("C_EinvhP_W")?
                + e.v("C_hP")? * e.v("C_hEred22_W")?;
            e.v("sigma_B")?.powi(2) * e.v("C_OmL_W")? + e.v("sigma_N0T")? * e.v("c_DphiT")? * e.v("c_Omega")? * inner
        };
        3 "C_EsymA_K" => |e| ratio(e.v("C_invLahS_K")?, 1.0 - e.v("sigma_lambda")?);
        3 "C_EsymA_W" => |e| ratio(e.v("C_invLahS_W")?, 1.0 - e.v("sigma_lambda")?);
        3 "C_Esym_K" => |e| (1.0 + e.v("C_AT")?) * (1.0 + e.v("C_A")?) * e.v("C_hEsym_K")? + e.v("C_EsymA_K")?;
        3 "C_Esym_W" => |e| (1.0 + e.v("C_AT")?) * (1.0 + e.v("C_A")?) * e.v("C_hEsym_W")? + e.v("C_EsymA_W")?;
        3 "C_Ered_K" => |e| (1.0 + e.v("C_AT")?) * (1.0 + e.v("C_A")?) * e.v("C_hEred_K")?;
        3 "C_Ered_W" => |e| (1.0 + e.v("C_AT")?) * (1.0 + e.v("C_A")?) * e.v("C_hEred_W")?;

        // Torus correction.
        4 "C_eta1_K" => |e| e.v("C_NT")? * e.v("c_Omega")?;
        4 "C_eta2_K" => |e| e.v("C_NT")? * e.v("c_Omega")?;
        4 "C_eta3_K" => |e| e.v("sigma_DthetaKT")?.max(e.v("C_cXT")?) * e.v("c_Omega")?;
        4 "C_avg_eta3_1" => |e| {
            2.0 * e.v("n")? * e.v("c_Da")? + e.v("sigma_DthetaKT")? * e.v("c_D2a")? * e.v("delta")? / 2.0
        };
        4 "C_avg_eta3_2" => |e| {
            let (n2l, al) = (2.0 * e.v("n")? * e.v("ell")?, e.v("abs_alpha_hat")?);
            n2l * e.v("c_DaT")? * al
                + (e.v("c_D2H")? + n2l * e.v("c_D2a")? * e.v("sigma_DphiK")? * al) * e.v("delta")? / 2.0
        };
        4 "C_avg_eta3" => |e| e.v("C_avg_eta3_1")?.max(e.v("C_avg_eta3_2")?);
        4 "C_eta4_K" => |e| e.v("sigma_WT")? * e.v("c_Omega")?;
        4 "C_avg_xi3_K" => |e| {
            e.v("sigma_inv_avg_S")? * (e.v("C_eta1_K")? * e.v("gd")? + e.v("C_hS")? * e.v("c_R")? * e.v("C_eta3_K")?)
        };
        4 "C_xi1_K" => |e| {
            let cr = e.v("c_R")?;
            cr * (e.v("C_eta1_K")? * e.v("gd")? + e.v("C_hS")? * (cr * e.v("C_eta3_K")? + e.v("C_avg_xi3_K")?))
        };
        4 "C_xi2_K" => |e| ratio(e.v("C_eta2_K")?, 1.0 - e.v("sigma_lambda")?);
        4 "C_xi3_K" => |e| e.v("c_R")? * e.v("C_eta3_K")? + e.v("C_avg_xi3_K")?;
        4 "C_xi4_K" => |e| {
            let sl = e.v("sigma_lambda")?;
            ratio(sl, 1.0 - sl) * e.v("C_eta4_K")?
        };
        4 "C_xi_K" => |e| {
            let (gd, gd2) = (e.v("gd")?, e.v("gd")?.powi(2));
            max(&[e.v("C_xi1_K")?, e.v("C_xi2_K")? * gd2, e.v("C_xi3_K")? * gd, e.v("C_xi4_K")? * gd2])
        };
        4 "C_DeK" => |e| {
            let (gd, gd2) = (e.v("gd")?, e.v("gd")?.powi(2));
            e.v("C_L")? * e.v("C_xi1_K")?.max(e.v("C_xi2_K")? * gd2)
                + e.v("C_N")? * (e.v("C_xi3_K")? * gd).max(e.v("C_xi4_K")? * gd2)
        };
        4 "C_ElinK_K" => |e| {
            (e.v("C_Ered_K")? + e.v("C_Esym_K")?) * e.v("C_xi_K")? + e.v("C_avg_eta3")? * e.v("gd")?.powi(3)
        };
        4 "C_ElinK_KW" => |e| (e.v("C_Ered_W")? + e.v("C_Esym_W")?) * e.v("C_xi_K")?;
        4 "C_EK_KK" => |e| {
            ratio(e.v("C_P")?, 1.0 - e.v("nu")?) * e.v("C_ElinK_K")? * e.v("gd_over_delta")?
                + 0.5 * e.v("c_D2phi")? * e.v("C_DeK")?.powi(2)
        };
        4 "C_EK_KW" => |e| ratio(e.v("C_P")?, 1.0 - e.v("nu")?) * e.v("C_ElinK_KW")?;

        // Bundle correction.
        5 "C_tildeE_K" => |e| e.v("c_D2phi")? * e.v("C_DeK")? * e.v("sigma_W")?;
        5 "C_tildeE_W" => |_e| 1.0;
        5 "C_eta1W_K" => |e| e.v("C_NT")? * e.v("c_Omega")? * e.v("C_tildeE_K")?;
        5 "C_eta1W_W" => |e| e.v("C_NT")? * e.v("c_Omega")?;
        5 "C_eta2W_K" => |e| e.v("C_NT")? * e.v("c_Omega")? * e.v("C_tildeE_K")?;
        5 "C_eta2W_W" => |e| e.v("C_NT")? * e.v("c_Omega")?;
        5 "C_eta3W_K" => |e| e.v("sigma_DthetaKT")?.max(e.v("C_cXT")?) * e.v("c_Omega")? * e.v("C_tildeE_K")?;
        5 "C_eta3W_W" => |e| e.v("sigma_DthetaKT")?.max(e.v("C_cXT")?) * e.v("c_Omega")?;
        5 "C_eta4W_K" => |e| e.v("sigma_WT")? * e.v("c_Omega")? * e.v("C_tildeE_K")?;
        5 "C_eta4W_W" => |e| e.v("sigma_WT")? * e.v("c_Omega")?;
        5 "C_xi1W_K" => |e| {
            let q = 1.0 - e.v("sigma_lambda")?;
            ratio(e.v("C_eta1W_K")? + ratio(e.v("C_hS")? * e.v("C_eta3W_K")?, q), q)
        };
        5 "C_xi1W_W" => |e| {
            let q = 1.0 - e.v("sigma_lambda")?;
            ratio(e.v("C_eta1W_W")? + ratio(e.v("C_hS")? * e.v("C_eta3W_W")?, q), q)
        };
        5 "C_xi2W_K" => |e| e.v("c_R")? * e.v("sigma_inv_lambda")? * e.v("C_eta2W_K")?;
        5 "C_xi2W_W" => |e| e.v("c_R")? * e.v("sigma_inv_lambda")? * e.v("C_eta2W_W")?;
        5 "C_xi3W_K" => |e| ratio(e.v("C_eta3W_K")?, 1.0 - e.v("sigma_lambda")?);
        5 "C_xi3W_W" => |e| ratio(e.v("C_eta3W_W")?, 1.0 - e.v("sigma_lambda")?);
        5 "C_xi4W_K" => |e| {
            let sl = e.v("sigma_lambda")?;
            ratio(sl, 1.0 - sl * sl) * e.v("C_eta4W_K")?
        };
        5 "C_xi4W_W" => |e| {
            let sl = e.v("sigma_lambda")?;
            ratio(sl, 1.0 - sl * sl) * e.v("C_eta4W_W")?
        };
        5 "C_xiW_K" => |e| {
            let gd = e.v("gd")?;
            max(&[e.v("C_xi1W_K")? * gd, e.v("C_xi2W_K")?, e.v("C_xi3W_K")? * gd, e.v("C_xi4W_K")? * gd])
        };
        5 "C_xiW_W" => |e| {
            let gd = e.v("gd")?;
            max(&[e.v("C_xi1W_W")? * gd, e.v("C_xi2W_W")?, e.v("C_xi3W_W")? * gd, e.v("C_xi4W_W")? * gd])
        };
        5 "C_DeW_K" => |e| {
            let gd = e.v("gd")?;
            e.v("C_L")? * (e.v("C_xi1W_K")? * gd).max(e.v("C_xi2W_K")?)
                + e.v("C_N")? * e.v("C_xi3W_K")?.max(e.v("C_xi4W_K")?) * gd
        };
        5 "C_DeW_W" => |e| {
            let gd = e.v("gd")?;
            e.v("C_L")? * (e.v("C_xi1W_W")? * gd).max(e.v("C_xi2W_W")?)
                + e.v("C_N")? * e.v("C_xi3W_W")?.max(e.v("C_xi4W_W")?) * gd
        };
        5 "C_Dela_K" => |e| e.v("C_eta2W_K")?;
        5 "C_Dela_W" => |e| e.v("C_eta2W_W")?;
        5 "C_ElinW_KK" => |e| {
            e.v("C_Ered_K")? * e.v("C_xiW_K")? + e.v("C_Esym_K")? * e.v("C_xiW_K")? * e.v("sigma_lambda")?
                + e.v("C_Esym_K")? * e.v("C_Dela_K")? * e.v("gd")?
        };
        5 "C_ElinW_KW" => |e| {
            let (gd, gdd) = (e.v("gd")?, e.v("gd_over_delta")?);
            e.v("C_Ered_W")? * e.v("C_xiW_K")? + e.v("C_Esym_W")? * e.v("C_xiW_K")?
                + (e.v("C_Ered_K")? * e.v("C_xiW_W")? + e.v("C_Esym_K")? * e.v("C_xiW_W")?) * gdd
                + e.v("C_Esym_W")? * e.v("C_Dela_K")? * gd
                + e.v("C_Esym_K")? * e.v("C_Dela_W")? * gd * gdd
        };
        5 "C_ElinW_WW" => |e| {
            e.v("C_Ered_W")? * e.v("C_xiW_W")? + e.v("C_Esym_W")? * e.v("C_xiW_W")? * e.v("sigma_lambda")?
                + e.v("C_Esym_W")? * e.v("C_Dela_W")? * e.v("gd")?
        };
        5 "C_DeDphi_KK" => |e| e.v("c_D2phi")? * e.v("C_DeK")? * e.v("C_DeW_K")?;
        5 "C_DeDphi_KW" => |e| e.v("c_D2phi")? * e.v("C_DeK")? * e.v("C_DeW_W")?;
        5 "C_DeWDela_KK" => |e| e.v("C_DeW_K")? * e.v("C_Dela_K")?;
        5 "C_DeWDela_KW" => |e| e.v("C_DeW_K")? * e.v("C_Dela_W")? + e.v("C_DeW_W")? * e.v("C_Dela_K")?;
        5 "C_DeWDela_WW" => |e| e.v("C_DeW_W")? * e.v("C_Dela_W")?;
        5 "C_EW_KK" => |e| {
            ratio(e.v("C_P")?, 1.0 - e.v("nu")?) * e.v("C_ElinW_KK")? * e.v("gd_over_delta")?
                + e.v("C_DeDphi_KK")? + e.v("C_DeWDela_KK")?
        };
        5 "C_EW_KW" => |e| {
            ratio(e.v("C_P")?, 1.0 - e.v("nu")?) * e.v("C_ElinW_KW")? + e.v("C_DeDphi_KW")? + e.v("C_DeWDela_KW")?
        };
        5 "C_EW_WW" => |e| ratio(e.v("C_P")?, 1.0 - e.v("nu")?) * e.v("C_ElinW_WW")? + e.v("C_DeWDela_WW")?;

        // One step of the iteration.
        6 "C_hEsym" => |e| e.v("C_hEsym_K")? * e.v("gd_over_delta")? + e.v("C_hEsym_W")?;
        6 "nu_hat" => |e| e.v("C_hEsym")? * e.v("E")?;
        6 "C_Esym" => |e| e.v("C_Esym_K")? * e.v("gd_over_delta")? + e.v("C_Esym_W")?;
        6 "nu" => |e| e.v("C_Esym")? * e.v("E")?;
        6 "C_DeW" => |e| e.v("C_DeW_K")? + e.v("C_DeW_W")?;
        6 "C_DeL_K" => |e| {
            (e.v("d")? + e.v("ell")? * e.v("abs_alpha_hat")? + e.v("c_DzX")? * e.v("delta")?)
                * e.v("C_DeK")? * e.v("gd_over_delta")?
                + e.v("C_DeW_K")?
        };
        6 "C_DeL_W" => |e| e.v("C_DeW_W")?;
        6 "C_DeL" => |e| e.v("C_DeL_K")? + e.v("C_DeL_W")?;
        6 "C_DeLT_K" => |e| {
            let m = (e.v("c_DzXT")? * e.v("delta")? + e.v("abs_alpha_hat_T")?).max(1.0);
            2.0 * e.v("n")? * (m * e.v("C_DeK")? * e.v("gd_over_delta")? + e.v("C_DeW_K")?)
        };
        6 "C_DeLT_W" => |e| 2.0 * e.v("n")? * e.v("C_DeW_W")?;
        6 "C_DeLT" => |e| e.v("C_DeLT_K")? + e.v("C_DeLT_W")?;
        6 "C_DeGL_K" => |e| {
            e.v("C_LT")? * e.v("c_DG")? * e.v("C_L")? * e.v("C_DeK")? * e.v("gd")?
                + e.v("C_LT")? * e.v("c_G")? * e.v("C_DeL_K")?
                + e.v("c_G")? * e.v("C_L")? * e.v("C_DeLT_K")?
        };
        6 "C_DeGL_W" => |e| e.v("C_LT")? * e.v("c_G")? * e.v("C_DeL_W")? + e.v("c_G")? * e.v("C_L")? * e.v("C_DeLT_W")?;
        6 "C_DeGL" => |e| e.v("C_DeGL_K")? + e.v("C_DeGL_W")?;
        6 "C_DeB_K" => |e| e.v("sigma_B")?.powi(2) * e.v("C_DeGL_K")?;
        6 "C_DeB_W" => |e| e.v("sigma_B")?.powi(2) * e.v("C_DeGL_W")?;
        6 "C_DeB" => |e| e.v("C_DeB_K")? + e.v("C_DeB_W")?;
        6 "C_DeN0_K" => |e| {
            let sb = e.v("sigma_B")?;
            e.v("c_J")? * (e.v("C_L")? * e.v("C_DeB_K")? + e.v("C_DeL_K")? * sb)
                + e.v("c_DJ")? * e.v("C_DeK")? * e.v("C_L")? * sb * e.v("gd")?
        };
        6 "C_DeN0_W" => |e| e.v("c_J")? * (e.v("C_L")? * e.v("C_DeB_W")? + e.v("C_DeL_W")? * e.v("sigma_B")?);
        6 "C_DeN0" => |e| e.v("C_DeN0_K")? + e.v("C_DeN0_W")?;
        6 "C_DeN0T_K" => |e| {
            let sb = e.v("sigma_B")?;
            e.v("c_JT")? * (e.v("C_LT")? * e.v("C_DeB_K")? + sb * e.v("C_DeLT_K")?)
                + sb * e.v("C_LT")? * e.v("c_DJT")? * 2.0 * e.v("n")? * e.v("C_DeK")? * e.v("gd")?
        };
        6 "C_DeN0T_W" => |e| e.v("c_JT")? * (e.v("C_LT")? * e.v("C_DeB_W")? + e.v("sigma_B")? * e.v("C_DeLT_W")?);
        6 "C_DeN0T" => |e| e.v("C_DeN0T_K")? + e.v("C_DeN0T_W")?;
        6 "C_DehS_K" => |e| {
            let (s0, s0t) = (e.v("sigma_N0")?, e.v("sigma_N0T")?);
            let (co, cd) = (e.v("c_Omega")?, e.v("c_Dphi")?);
            s0t * co * cd * e.v("C_DeN0_K")?
                + s0t * s0 * (e.v("c_DOmega")? * cd + co * e.v("c_D2phi")?) * e.v("C_DeK")? * e.v("gd")?
                + e.v("C_DeN0T_K")? * co * cd * s0
        };
        6 "C_DehS_W" => |e| {
            let (co, cd) = (e.v("c_Omega")?, e.v("c_Dphi")?);
            e.v("sigma_N0T")? * co * cd * e.v("C_DeN0_W")? + e.v("C_DeN0T_W")? * co * cd * e.v("sigma_N0")?
        };
        6 "C_DehS" => |e| e.v("C_DehS_K")? + e.v("C_DehS_W")?;
        6 "C_DeinvavgS_K" => |e| e.v("sigma_inv_avg_S")?.powi(2) * e.v("C_DehS_K")?;
        6 "C_DeinvavgS_W" => |e| e.v("sigma_inv_avg_S")?.powi(2) * e.v("C_DehS_W")?;
        6 "C_DeinvavgS" => |e| e.v("C_DeinvavgS_K")? + e.v("C_DeinvavgS_W")?;
        6 "C_Dela" => |e| e.v("C_Dela_K")? + e.v("C_Dela_W")?;
        6 "C_Deinvla" => |e| e.v("sigma_inv_lambda")?.powi(2) * e.v("C_Dela")?;
        6 "C_EK" => |e| e.v("C_EK_KK")? + e.v("C_EK_KW")?;
        6 "C_EW" => |e| e.v("C_EW_KK")? + e.v("C_EW_WW")? + e.v("C_EW_KW")?;
        6 "C_Delta" => |e| {
            let (gd, gdd, n2) = (e.v("gd")?, e.v("gd_over_delta")?, 2.0 * e.v("n")?);
            let dek = e.v("C_DeK")?;
            max(&[
                e.v("C_Esym")? * gd,
                ratio(e.v("gd")?.powi(2).max(dek), e.v("R")? - e.v("norm_K_minus_K0")?) * gd,
                ratio(e.v("d")? * dek, e.v("sigma_DthetaK")? - e.v("norm_DthetaK")?) * gdd,
                ratio(e.v("ell")? * dek, e.v("sigma_DphiK")? - e.v("norm_DphiK")?) * gdd,
                ratio(n2 * dek, e.v("sigma_DthetaKT")? - e.v("norm_DthetaKT")?) * gdd,
                ratio(n2 * dek, e.v("sigma_DphiKT")? - e.v("norm_DphiKT")?) * gdd,
                ratio(e.v("C_DeW")?, e.v("sigma_W")? - e.v("norm_W")?),
                ratio(n2 * e.v("C_DeW")?, e.v("sigma_WT")? - e.v("norm_WT")?),
                ratio(e.v("C_DeB")?, e.v("sigma_B")? - e.v("norm_B")?),
                ratio(e.v("C_DeN0")?, e.v("sigma_N0")? - e.v("norm_N0")?),
                ratio(e.v("C_DeN0T")?, e.v("sigma_N0T")? - e.v("norm_N0T")?),
                ratio(e.v("C_DeinvavgS")?, e.v("sigma_inv_avg_S")? - e.v("norm_inv_avg_S")?),
                ratio(e.v("C_Dela")?, e.v("sigma_lambda")? - e.v("abs_lambda")?) * gd,
                ratio(e.v("C_Deinvla")?, e.v("sigma_inv_lambda")? - e.v("abs_inv_lambda")?) * gd,
            ])
        };

        // Whole iteration.
        7 "C_E" => |e| (e.v("C_EK")? * e.v("a_2tau")?).max(e.v("C_EW")? * e.v("gamma")? * e.v("delta")?);
        7 "kappa" => |e| e.v("a_2tau")? * e.v("C_E")? * e.v("E")? / e.v("gd")?.powi(2);
        7 "frak_C_DeK" => |e| geometric(e.v("a_2tau")?, e.v("kappa")?) * e.v("C_DeK")?;
        7 "frak_C_tU" => |e| e.v("gd")?.powi(2) + e.v("frak_C_DeK")?;
        7 "frak_C_DthetaK" => |e| geometric(e.v("a_2tau_1")?, e.v("kappa")?) * e.v("d")? * e.v("C_DeK")?;
        7 "frak_C_DphiK" => |e| geometric(e.v("a_2tau_1")?, e.v("kappa")?) * e.v("ell")? * e.v("C_DeK")?;
        7 "frak_C_DthetaKT" => |e| geometric(e.v("a_2tau_1")?, e.v("kappa")?) * 2.0 * e.v("n")? * e.v("C_DeK")?;
        7 "frak_C_DphiKT" => |e| geometric(e.v("a_2tau_1")?, e.v("kappa")?) * 2.0 * e.v("n")? * e.v("C_DeK")?;
        7 "frak_C_W" => |e| geometric(e.v("a_tau")?, e.v("kappa")?) * e.v("C_DeW")?;
        7 "frak_C_WT" => |e| geometric(e.v("a_tau")?, e.v("kappa")?) * 2.0 * e.v("n")? * e.v("C_DeW")?;
        7 "frak_C_DeB" => |e| geometric(e.v("a_tau")?, e.v("kappa")?) * e.v("C_DeB")?;
        7 "frak_C_N0" => |e| geometric(e.v("a_tau")?, e.v("kappa")?) * e.v("C_DeN0")?;
        7 "frak_C_N0T" => |e| geometric(e.v("a_tau")?, e.v("kappa")?) * e.v("C_DeN0T")?;
        7 "frak_C_DeinvavgS" => |e| geometric(e.v("a_tau")?, e.v("kappa")?) * e.v("C_DeinvavgS")?;
        7 "frak_C_Dela" => |e| e.v("frak_c_lambda")? * geometric(e.v("a_2tau")?, e.v("kappa")?) * e.v("C_Dela")?;
        7 "frak_C_Deinvla" => |e| geometric(e.v("a_2tau")?, e.v("kappa")?) * e.v("C_Deinvla")?;
        7 "frak_C_Delta" => |e| {
            let (gd, gdd) = (e.v("gd")?, e.v("gd_over_delta")?);
            max(&[
                e.v("C_Esym")? * gd,
                e.v("frak_C_tU")? / e.v("R")? * gd,
                ratio(e.v("frak_C_DthetaK")?, e.v("sigma_DthetaK")? - e.v("norm_DthetaK")?) * gdd,
                ratio(e.v("frak_C_DphiK")?, e.v("sigma_DphiK")? - e.v("norm_DphiK")?) * gdd,
                ratio(e.v("frak_C_DthetaKT")?, e.v("sigma_DthetaKT")? - e.v("norm_DthetaKT")?) * gdd,
                ratio(e.v("frak_C_DphiKT")?, e.v("sigma_DphiKT")? - e.v("norm_DphiKT")?) * gdd,
                ratio(e.v("frak_C_W")?, e.v("sigma_W")? - e.v("norm_W")?),
                ratio(e.v("frak_C_WT")?, e.v("sigma_WT")? - e.v("norm_WT")?),
                ratio(e.v("frak_C_DeB")?, e.v("sigma_B")? - e.v("norm_B")?),
                ratio(e.v("frak_C_N0")?, e.v("sigma_N0")? - e.v("norm_N0")?),
                ratio(e.v("frak_C_N0T")?, e.v("sigma_N0T")? - e.v("norm_N0T")?),
                ratio(e.v("frak_C_DeinvavgS")?, e.v("sigma_inv_avg_S")? - e.v("norm_inv_avg_S")?),
                ratio(e.v("frak_C_Dela")?, e.v("sigma_lambda")? - e.v("abs_lambda")?) * gd,
                ratio(e.v("frak_C_Deinvla")?, e.v("sigma_inv_lambda")? - e.v("abs_inv_lambda")?) * gd,
            ])
        };
        7 "frak_C" => |e| (e.v("a_2tau")? * e.v("C_E")?).max(e.v("frak_C_Delta")? * e.v("gd")?);
    }
}

/// `p/(p − κ)`, infinite once `κ ≥ p`.
fn geometric(p: f64, kappa: f64) -> f64 {
    ratio(p, p - kappa)
}

/// Composite error `max(‖E_K‖/(γ²δ^{2τ}), ‖E_W‖)`.
pub fn composite_error(ek: f64, ew: f64, gamma: f64, delta: f64, tau: f64) -> f64 {
    (ek / (gamma * delta.powf(tau)).powi(2)).max(ew)
}

/// Named inputs seen by the formulas.
fn inputs(b: &HypothesisBounds, m: &MeasuredNorms) -> BTreeMap<&'static str, f64> {
    let gd = b.gamma * b.delta.powf(b.tau);
    let a = (b.rho - b.rho_inf) / (b.rho - 3.0 * b.delta - b.rho_inf);
    let abs_alpha = m.alpha_hat.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let abs_alpha_t: f64 = m.alpha_hat.iter().map(|v| v.abs()).sum();
    BTreeMap::from([
        ("c_Omega", b.c_omega),
        ("c_DOmega", b.c_d_omega),
        ("c_Da", b.c_da),
        ("c_DaT", b.c_da_t),
        ("c_D2a", b.c_d2a),
        ("c_J", b.c_j),
        ("c_JT", b.c_j_t),
        ("c_DJ", b.c_dj),
        ("c_DJT", b.c_dj_t),
        ("c_G", b.c_g),
        ("c_DG", b.c_dg),
        ("c_X", b.c_x),
        ("c_XT", b.c_x_t),
        ("c_DzX", b.c_dzx),
        ("c_DzXT", b.c_dzx_t),
        ("c_D2H", b.c_d2h),
        ("c_Dphi", b.c_dphi),
        ("c_DphiT", b.c_dphi_t),
        ("c_D2phi", b.c_d2phi),
        ("sigma_DthetaK", b.sigma_dtheta_k),
        ("sigma_DthetaKT", b.sigma_dtheta_k_t),
        ("sigma_DphiK", b.sigma_dphi_k),
        ("sigma_DphiKT", b.sigma_dphi_k_t),
        ("sigma_W", b.sigma_w),
        ("sigma_WT", b.sigma_w_t),
        ("sigma_N0", b.sigma_n0),
        ("sigma_N0T", b.sigma_n0_t),
        ("sigma_B", b.sigma_b),
        ("sigma_lambda", b.sigma_lambda),
        ("sigma_inv_lambda", b.sigma_inv_lambda),
        ("sigma_inv_avg_S", b.sigma_inv_avg_s),
        ("R", b.big_r),
        ("rho", b.rho),
        ("delta", b.delta),
        ("gamma", b.gamma),
        ("tau", b.tau),
        ("c_R", b.c_r),
        ("gd", gd),
        ("gd_over_delta", gd / b.delta),
        ("a", a),
        ("a_tau", a.powf(b.tau)),
        ("a_2tau", a.powf(2.0 * b.tau)),
        ("a_2tau_1", a.powf(2.0 * b.tau - 1.0)),
        ("frak_c_lambda", 1.0),
        ("n", m.n as f64),
        ("d", m.d as f64),
        ("ell", m.ell as f64),
        ("abs_alpha_hat", abs_alpha),
        ("abs_alpha_hat_T", abs_alpha_t),
        ("norm_DthetaK", m.dtheta_k),
        ("norm_DthetaKT", m.dtheta_k_t),
        ("norm_DphiK", m.dphi_k),
        ("norm_DphiKT", m.dphi_k_t),
        ("norm_W", m.w),
        ("norm_WT", m.w_t),
        ("norm_B", m.b),
        ("norm_N0", m.n0),
        ("norm_N0T", m.n0_t),
        ("norm_inv_avg_S", m.inv_avg_s),
        ("abs_lambda", m.lambda.abs()),
        ("abs_inv_lambda", 1.0 / m.lambda.abs()),
        ("norm_K_minus_K0", m.k_minus_k0),
        ("E", composite_error(m.ek, m.ew, b.gamma, b.delta, b.tau)),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub value: f64,
    pub table: u8,
}

/// Evaluated constants keyed by symbol, plus the named inputs they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub constants: BTreeMap<String, LedgerEntry>,
    pub inputs: BTreeMap<String, f64>,
}

impl ConstantsLedger {
    pub fn get(&self, symbol: &str) -> f64 {
        self.constants
            .get(symbol)
            .map(|e| e.value)
            .or_else(|| self.inputs.get(symbol).copied())
            .unwrap_or_else(|| panic!("unknown ledger symbol {symbol}"))
    }
}

/// Evaluate every formula, visiting pending ones in `order` (indices into `formulas()`).
pub fn evaluate_in_order(
    bounds: &HypothesisBounds,
    measured: &MeasuredNorms,
    order: &[usize],
) -> Result<ConstantsLedger> {
    let table = formulas();
    let mut values = inputs(bounds, measured);
    let input_map: BTreeMap<String, f64> = values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let mut pending: Vec<usize> = order.to_vec();
    while !pending.is_empty() {
        let before = pending.len();
        let mut still = Vec::with_capacity(before);
        for idx in pending {
            let f = &table[idx];
            let value = (f.eval)(&Env { values: &values });
            match value {
                Some(v) => {
                    values.insert(f.symbol, if v.is_nan() { f64::INFINITY } else { v });
                }
                None => still.push(idx),
            }
        }
        if still.len() == before {
            let names: Vec<&str> = still.iter().map(|&i| table[i].symbol).collect();
            return Err(Error::Invalid(format!("unresolved ledger formulas: {names:?}")));
        }
        pending = still;
    }
    let constants = table
        .iter()
        .map(|f| {
            (
                f.symbol.to_string(),
                LedgerEntry {
                    value: values[f.symbol],
                    table: f.table,
                },
            )
        })
        .collect();
    Ok(ConstantsLedger {
        constants,
        inputs: input_map,
    })
}

/// Check the bounds against the measured norms and evaluate the whole ledger.
pub fn build_ledger(bounds: &HypothesisBounds, measured: &MeasuredNorms) -> Result<ConstantsLedger> {
    bounds.check_against(measured)?;
    let order: Vec<usize> = (0..formulas().len()).collect();
    evaluate_in_order(bounds, measured, &order)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    pub(crate) fn sample_bounds() -> (HypothesisBounds, MeasuredNorms) {
        let b = HypothesisBounds {
            c_omega: 1.0,
            c_d_omega: 0.0,
            c_da: 1.0,
            c_da_t: 1.0,
            c_d2a: 0.0,
            c_j: 1.0,
            c_j_t: 1.0,
            c_dj: 0.0,
            c_dj_t: 0.0,
            c_g: 1.0,
            c_dg: 0.0,
            c_x: 2.0,
            c_x_t: 2.0,
            c_dzx: 1.5,
            c_dzx_t: 1.5,
            c_d2h: 1.5,
            c_dphi: 3.0,
            c_dphi_t: 3.0,
            c_d2phi: 5.0,
            sigma_dtheta_k: 7.0,
            sigma_dtheta_k_t: 7.0,
            sigma_dphi_k: 1.0,
            sigma_dphi_k_t: 1.0,
            sigma_w: 2.0,
            sigma_w_t: 2.0,
            sigma_n0: 3.0,
            sigma_n0_t: 3.0,
            sigma_b: 2.0,
            sigma_lambda: 0.3,
            sigma_inv_lambda: 14.0,
            sigma_inv_avg_s: 70.0,
            r: 0.05,
            big_r: 1.0,
            rho: 0.02,
            rho_inf: 0.01,
            delta: 0.002,
            gamma: 0.1,
            tau: 2.0,
            c_r: 1.0,
        };
        let m = MeasuredNorms {
            n: 3,
            d: 1,
            ell: 1,
            alpha_hat: vec![1.0 / (2.0 * std::f64::consts::PI)],
            dtheta_k: 3.3,
            dtheta_k_t: 3.3,
            dphi_k: 0.4,
            dphi_k_t: 0.4,
            w: 1.0,
            w_t: 1.0,
            n0: 1.2,
            n0_t: 1.2,
            b: 0.9,
            inv_avg_s: 34.5,
            lambda: 0.15,
            k_minus_k0: 0.0,
            ek: 1e-22,
            ew: 1e-20,
        };
        (b, m)
    }

    #[test]
    fn substitution_examples() {
        let (mut b, m) = sample_bounds();
        b.c_x = 1.0;
        b.sigma_dphi_k = 2.0;
        let m = MeasuredNorms { alpha_hat: vec![0.5], ..m };
        b.sigma_n0 = 1.0;
        b.sigma_n0_t = 1.0;
        b.c_omega = 1.0;
        b.c_dphi = 3.0;
        let order: Vec<usize> = (0..formulas().len()).collect();
        let l = evaluate_in_order(&b, &m, &order).unwrap();
        assert_eq!(l.get("C_cX"), 2.0);
        assert_eq!(l.get("C_hS"), 3.0);
        let sl: f64 = b.sigma_lambda;
        let expect = (l.get("C_hS") * sl + l.get("C_hST")) / (1.0 - sl * sl);
        assert_eq!(l.get("C_A"), expect);
    }

    #[test]
    fn order_independent_bit_for_bit() {
        let (b, m) = sample_bounds();
        let reference = build_ledger(&b, &m).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut order: Vec<usize> = (0..formulas().len()).collect();
            order.shuffle(&mut rng);
            let other = evaluate_in_order(&b, &m, &order).unwrap();
            for (k, v) in &reference.constants {
                assert_eq!(v.value.to_bits(), other.constants[k].value.to_bits(), "{k}");
            }
        }
    }

    #[test]
    fn entries_nonnegative_and_step_constants_finite() {
        let (b, m) = sample_bounds();
        let l = build_ledger(&b, &m).unwrap();
        for (k, e) in &l.constants {
            assert!(e.value >= 0.0, "{k} = {}", e.value);
            if e.table <= 5 {
                assert!(e.value.is_finite(), "{k} = {}", e.value);
            }
        }
        assert!(l.get("nu_hat") <= l.get("nu"));
    }

    #[test]
    fn symbols_are_unique() {
        let mut names: Vec<&str> = formulas().iter().map(|f| f.symbol).collect();
        let total = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), total);
    }

    #[test]
    fn margin_violation_names_the_symbol() {
        let (mut b, m) = sample_bounds();
        b.sigma_w = m.w;
        let err = build_ledger(&b, &m).unwrap_err().to_string();
        assert!(err.contains("sigma_w"), "{err}");
    }
}
