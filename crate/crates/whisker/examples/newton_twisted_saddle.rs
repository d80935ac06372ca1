//! Newton iteration for the twisted saddle from a perturbed torus.
//!
//! `cargo run --release --example newton_twisted_saddle -- 32` runs on a 32x32 grid (default 16).

use std::time::Instant;
use whisker::cli::perturb_modes;
use whisker::cohomology::DiophantineParams;
use whisker::dynamics::{IntegratorOptions, RotatorSaddle, StandardGeometry};
use whisker::fourier::GridSpec;
use whisker::newton::{iterate, Approximation, NewtonOptions, Problem};

fn main() -> anyhow::Result<()> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(16);
    let sys = RotatorSaddle::twisted_saddle(0.6180339887498949, 0.41421356237309515, [0.1, 0.15], 0.3, 0.2);
    let grid = GridSpec::new(1, 1, vec![n, n])?;
    let dio = DiophantineParams::measure(&sys.omega(), &sys.alpha(), 2.0, n)?;
    let geo = StandardGeometry { n: 3 };
    let problem = Problem { system: &sys, geometry: &geo, dio, period: sys.period() };

    let exact = sys.exact_torus(&grid).to_series();
    let start = Approximation {
        k: perturb_modes(&exact, 1, 3, 1e-3, 2)?,
        w: sys.exact_bundle(&grid).to_series(),
        lambda: sys.lambda() * 1.01,
    };
    let t0 = Instant::now();
    let out = iterate(&problem, &start, &NewtonOptions::default(), &IntegratorOptions::default(), |r| {
        println!(
            "iter {}: |E_K| = {:.3e}, |E_W| = {:.3e}, lambda = {:.15}",
            r.j, r.norm_ek, r.norm_ew, r.lambda
        );
    })?;
    println!(
        "converged = {}, |lambda - e^(-mu T)| = {:.1e}, {:.1?}",
        out.converged,
        (out.approx.lambda - sys.lambda()).abs(),
        t0.elapsed()
    );
    Ok(())
}
