//! Constants ledger and both verdicts from a `compute` output directory.
//!
//! ```text
//! cargo run --release -- compute --config crates/whisker/configs/twisted_saddle.toml --out run
//! cargo run --release --example certificate_ledger -- run
//! ```
//! Without an argument, a synthetic set of bounds is used.

use whisker::certificate::certify;
use whisker::cli::Measurements;
use whisker::ledger::{HypothesisBounds, MeasuredNorms};

fn synthetic() -> anyhow::Result<(HypothesisBounds, MeasuredNorms)> {
    let bounds: HypothesisBounds = serde_json::from_value(serde_json::json!({
        "c_omega": 1.0, "c_d_omega": 0.0, "c_da": 1.0, "c_da_t": 1.0, "c_d2a": 0.0,
        "c_j": 1.0, "c_j_t": 1.0, "c_dj": 0.0, "c_dj_t": 0.0, "c_g": 1.0, "c_dg": 0.0,
        "c_x": 2.0, "c_x_t": 2.0, "c_dzx": 2.0, "c_dzx_t": 2.0, "c_d2h": 2.0,
        "c_dphi": 5.0, "c_dphi_t": 5.0, "c_d2phi": 10.0,
        "sigma_dtheta_k": 2.0, "sigma_dtheta_k_t": 2.0, "sigma_dphi_k": 2.0, "sigma_dphi_k_t": 2.0,
        "sigma_w": 2.0, "sigma_w_t": 2.0, "sigma_n0": 2.0, "sigma_n0_t": 2.0, "sigma_b": 2.0,
        "sigma_lambda": 0.5, "sigma_inv_lambda": 6.0, "sigma_inv_avg_s": 10.0,
        "r": 0.5, "R": 1.0, "rho": 0.2, "rho_inf": 0.02, "delta": 0.05, "gamma": 0.3, "tau": 1.0, "c_r": 1.0
    }))?;
    let measured = MeasuredNorms {
        n: 3, d: 1, ell: 1, alpha_hat: vec![0.1],
        dtheta_k: 1.0, dtheta_k_t: 1.0, dphi_k: 1.0, dphi_k_t: 1.0, w: 1.0, w_t: 1.0, n0: 1.0, n0_t: 1.0,
        b: 1.0, inv_avg_s: 5.0, lambda: 0.2, k_minus_k0: 0.0, ek: 1e-40, ew: 1e-40,
    };
    Ok((bounds, measured))
}

fn main() -> anyhow::Result<()> {
    let (bounds, measured) = match std::env::args().nth(1) {
        Some(dir) => {
            let dir = std::path::Path::new(&dir);
            let m: Measurements = serde_json::from_str(&std::fs::read_to_string(dir.join("measured.json"))?)?;
            let b: HypothesisBounds = serde_json::from_str(&std::fs::read_to_string(dir.join("bounds.json"))?)?;
            (b, m.norms)
        }
        None => synthetic()?,
    };
    for scale in [1.0, 1e10] {
        let cert = certify(&bounds, &measured.with_scaled_errors(scale))?;
        println!("error norms x{scale:e}:");
        println!("  composite error  {:.3e}", cert.e_composite);
        println!("  kappa {:.3e}, nu {:.3e}, nu_hat {:.3e}", cert.kappa, cert.nu, cert.nu_hat);
        println!("  iterative lemma  {:.3e} < 1: {}", cert.lhs_iter, cert.iter_verdict);
        println!("  convergence      {:.3e} < 1: {}", cert.lhs_kam, cert.kam_verdict);
        println!("  |K_inf - K| <= {:.3e}, |lambda_inf - lambda| <= {:.3e}", cert.closeness.torus, cert.closeness.lambda);
        if scale == 1.0 {
            for table in 1..=7 {
                let count = cert.ledger.constants.values().filter(|e| e.table == table).count();
                let unbounded = cert.ledger.constants.values().filter(|e| e.table == table && !e.value.is_finite()).count();
                println!("  table {table}: {count} constants, {unbounded} unbounded");
            }
        }
    }
    Ok(())
}
