//! Residuals of the frame identities and their explicit bounds along a perturbation sweep.

use whisker::cli::{perturb_modes, RunConfig};
use whisker::diagnostics::{
    bounds_from_measurements, check_bounds, measure_constants, measure_norms, residuals, second_flow_derivative,
};
use whisker::dynamics::{Hamiltonian, StandardGeometry};
use whisker::frames::{build_frame, FrameOptions};
use whisker::ledger::build_ledger;
use whisker::newton::{compute_errors, Approximation, Problem};

fn main() -> anyhow::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/twisted_saddle.toml");
    let mut cfg = RunConfig::load(&path)?;
    cfg.grid.sizes = vec![16, 16];
    let sys = cfg.system.build();
    let grid = cfg.grid()?;
    let geo = StandardGeometry { n: sys.half_dim() };
    let dio = cfg.diophantine(&sys)?;
    let problem = Problem { system: &sys, geometry: &geo, dio: dio.clone(), period: sys.period() };
    let integ = cfg.integrator();
    let domain = cfg.domain(&dio, &grid)?;
    let rho = domain.rho;
    let k0 = sys.exact_torus(&grid).to_series();

    for eps in [1e-3, 1e-4, 1e-5] {
        let approx = Approximation {
            k: perturb_modes(&k0, 5, 3, eps, 2)?,
            w: sys.exact_bundle(&grid).to_series(),
            lambda: sys.lambda(),
        };
        let errors = compute_errors(&problem, &approx, &integ)?;
        let frame = build_frame(
            &sys, &geo, &approx.k, &approx.w, approx.lambda, &errors.dflow, &dio, &FrameOptions::default(),
        )?;
        let res = residuals(&problem, &approx, &errors, &frame)?;
        let norms = measure_norms(&problem, &approx, &errors, &frame, Some(&k0), rho)?;
        let d2 = second_flow_derivative(&sys, &approx.k.to_field(), sys.period(), grid.total() / 8, &integ)?;
        let constants = measure_constants(&problem, &approx, &errors, rho, d2);
        let ledger = build_ledger(&bounds_from_measurements(&constants, &norms, &domain, 2.0), &norms)?;
        let (ek, ew) = (errors.ek.strip_norm(rho), errors.ew.strip_norm(rho));
        println!("eps = {eps:.0e}: |E_K| = {ek:.3e}, |E_W| = {ew:.3e}");
        for c in check_bounds(&res, &ledger, ek, ew) {
            println!("  {:<18} {:.3e} <= {:.3e}  {}", c.name, c.norm, c.bound, if c.holds { "ok" } else { "VIOLATED" });
        }
    }
    Ok(())
}
