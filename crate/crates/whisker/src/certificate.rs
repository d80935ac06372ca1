//! Verdicts of the iterative lemma and of the convergence theorem from an evaluated ledger.

use crate::error::Result;
use crate::ledger::{build_ledger, ConstantsLedger, HypothesisBounds, MeasuredNorms};
use serde::{Deserialize, Serialize};

/// Distance bounds between the current objects and the limit objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Closeness {
    pub torus: f64,
    pub bundle: f64,
    pub lambda: f64,
    pub inv_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `max(‖E_K‖_ρ/(γ²δ^{2τ}), ‖E_W‖_ρ)`.
    pub e_composite: f64,
    /// `C_Δ 𝔈 / (γδ^τ)`.
    pub lhs_iter: f64,
    /// `𝔠 𝔈 / (γ²δ^{2τ})`.
    pub lhs_kam: f64,
    pub iter_verdict: bool,
    pub kam_verdict: bool,
    pub closeness: Closeness,
    pub a: f64,
    pub kappa: f64,
    pub nu: f64,
    pub nu_hat: f64,
    /// Flagged factor in the multiplier closeness constant, taken as one.
    pub frak_c_lambda: f64,
    pub ledger: ConstantsLedger,
}

/// `c · 𝔈`, read as zero when the error vanishes even if `c` is infinite.
fn scaled(c: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        c * e
    }
}

pub fn check_certificate(ledger: ConstantsLedger) -> Certificate {
    let e = ledger.get("E");
    let gd = ledger.get("gd");
    let lhs_iter = scaled(ledger.get("C_Delta"), e) / gd;
    let lhs_kam = scaled(ledger.get("frak_C"), e) / (gd * gd);
    let closeness = Closeness {
        torus: scaled(ledger.get("frak_C_DeK"), e),
        bundle: scaled(ledger.get("frak_C_W"), e) / gd,
        lambda: scaled(ledger.get("frak_C_Dela"), e),
        inv_lambda: scaled(ledger.get("frak_C_Deinvla"), e),
    };
    Certificate {
        e_composite: e,
        lhs_iter,
        lhs_kam,
        iter_verdict: lhs_iter < 1.0,
        kam_verdict: lhs_kam < 1.0,
        closeness,
        a: ledger.get("a"),
        kappa: ledger.get("kappa"),
        nu: ledger.get("nu"),
        nu_hat: ledger.get("nu_hat"),
        frak_c_lambda: ledger.get("frak_c_lambda"),
        ledger,
    }
}

/// Build the ledger from bounds and measurements and evaluate both conditions.
pub fn certify(bounds: &HypothesisBounds, measured: &MeasuredNorms) -> Result<Certificate> {
    Ok(check_certificate(build_ledger(bounds, measured)?))
}
