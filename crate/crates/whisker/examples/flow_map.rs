//! Time-T flow map of the twisted saddle: jets, symplecticity and invariance of the exact torus.

use whisker::cohomology::DiophantineParams;
use whisker::dynamics::{flow_jet, standard_omega, IntegratorOptions, JetOrder, RotatorSaddle, StandardGeometry};
use whisker::fourier::GridSpec;
use whisker::newton::{compute_errors, Approximation, Problem};

fn main() -> anyhow::Result<()> {
    let sys = RotatorSaddle::twisted_saddle(0.6180339887498949, 0.41421356237309515, [0.1, 0.15], 0.3, 0.2);
    let opts = IntegratorOptions::default();
    println!("period T = {:.6}, internal rotation {:?}, external {:?}", sys.period(), sys.omega(), sys.alpha());

    let z = [0.8, 1.1, 0.05, -0.3, 0.2, 0.1];
    let jet = flow_jet(&sys, &z, &[0.25], sys.period(), JetOrder::Second, &opts)?;
    println!("phi_T(z) = {:?}", jet.phi.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>());
    println!("{} accepted steps, {} rejected", jet.stats.accepted, jet.stats.rejected);

    let m = 6;
    let om = standard_omega(3);
    let mut defect: f64 = 0.0;
    for r in 0..m {
        for c in 0..m {
            let mut acc = 0.0;
            for a in 0..m {
                for b in 0..m {
                    acc += jet.dphi[a * m + r] * om[a * m + b] * jet.dphi[b * m + c];
                }
            }
            defect = defect.max((acc - om[r * m + c]).abs());
        }
    }
    println!("|Dphi^T Omega Dphi - Omega| = {defect:.2e}");

    let grid = GridSpec::new(1, 1, vec![16, 16])?;
    let dio = DiophantineParams::measure(&sys.omega(), &sys.alpha(), 2.0, 16)?;
    let geo = StandardGeometry { n: 3 };
    let problem = Problem { system: &sys, geometry: &geo, dio, period: sys.period() };
    let exact = Approximation {
        k: sys.exact_torus(&grid).to_series(),
        w: sys.exact_bundle(&grid).to_series(),
        lambda: sys.lambda(),
    };
    let errors = compute_errors(&problem, &exact, &opts)?;
    println!(
        "closed-form torus: |E_K| = {:.2e}, |E_W| = {:.2e}, multiplier e^(-mu T) = {:.12}",
        errors.ek.strip_norm(0.02),
        errors.ew.strip_norm(0.02),
        sys.lambda()
    );
    Ok(())
}
