//! Adapted frame at a slightly perturbed torus: torsion, twist condition and frame identities.

use whisker::cohomology::DiophantineParams;
use whisker::diagnostics::residuals;
use whisker::dynamics::{IntegratorOptions, RotatorSaddle, StandardGeometry};
use whisker::fourier::{Complex64, GridSpec};
use whisker::frames::{build_frame, FrameOptions};
use whisker::newton::{compute_errors, Approximation, Problem};

fn main() -> anyhow::Result<()> {
    let sys = RotatorSaddle::twisted_saddle(0.6180339887498949, 0.41421356237309515, [0.1, 0.15], 0.3, 0.2);
    let grid = GridSpec::new(1, 1, vec![16, 16])?;
    let dio = DiophantineParams::measure(&sys.omega(), &sys.alpha(), 2.0, 16)?;
    let geo = StandardGeometry { n: 3 };
    let problem = Problem { system: &sys, geometry: &geo, dio: dio.clone(), period: sys.period() };

    let mut k = sys.exact_torus(&grid).to_series();
    let c = k.coeff(0, 0, &[1, 1]);
    k.set_coeff(0, 0, &[1, 1], c + Complex64::new(1e-4, -2e-4))?;
    let approx = Approximation { k, w: sys.exact_bundle(&grid).to_series(), lambda: sys.lambda() };
    let errors = compute_errors(&problem, &approx, &IntegratorOptions::default())?;

    let frame = build_frame(
        &sys, &geo, &approx.k, &approx.w, approx.lambda, &errors.dflow, &dio, &FrameOptions::default(),
    )?;
    println!("n = {}, d = {}, frame P is {}x{}", frame.n, frame.d, frame.p.rows(), frame.p.cols());
    println!("average torsion <S> = {:?}", frame.avg_s);
    println!("<S>^-1 = {:?} (twist condition holds when finite)", frame.avg_s_inv);

    let res = residuals(&problem, &approx, &errors, &frame)?;
    println!("|E_K| = {:.2e}", errors.ek.strip_norm(0.02));
    for id in res.identities(frame.d) {
        println!("  {:<28} {:.2e}", id.name, id.value);
    }
    println!("reducibility residual {:.2e}", res.reduction.max_abs());
    Ok(())
}
