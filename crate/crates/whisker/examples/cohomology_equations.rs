//! Small-divisor and non-resonant cohomological equations with their a-priori bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whisker::cohomology::{russmann_mode_bound, solve_nonresonant, solve_small_divisor, DiophantineParams, RussmannConstant};
use whisker::fourier::{l1, Complex64, FourierSeries, GridSpec};

fn main() -> anyhow::Result<()> {
    let grid = GridSpec::new(1, 1, vec![32, 32])?;
    let (omega, alpha) = (0.6180339887498949, 0.41421356237309515);
    let dio = DiophantineParams::measure(&[omega], &[alpha], 2.0, grid.max_mode_l1())?;
    println!("gamma = {:.6} for tau = {}", dio.gamma, dio.tau);

    let (rho, delta) = (0.05, 0.01);
    let sharp = russmann_mode_bound(&dio, &grid, delta)?;
    let c_r = RussmannConstant::default().resolve(&dio, &grid, rho, delta)?;
    println!("small-divisor constant: sharp {sharp:.4e}, empirical with safety {c_r:.4e}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let coeffs = (0..grid.total())
        .map(|p| {
            let w = (-0.3 * l1(&grid.mode(p)) as f64).exp();
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w
        })
        .collect();
    let mut eta = FourierSeries::from_coeffs(&grid, 1, 1, coeffs)?;
    eta.symmetrize();
    eta.project_band();

    let shift = dio.shift();
    let sol = solve_small_divisor(&eta, &dio, &shift, rho, delta, c_r)?;
    let residual = sol.xi.sub(&sol.xi.rotate(&shift)?)?.sub(&eta.without_average())?;
    println!(
        "xi - xi(. + omega) = eta - <eta>: residual {:.2e}, |xi| = {:.4e} <= bound {:.4e}, smallest divisor {:.2e}",
        residual.to_field().max_abs(),
        sol.xi.strip_norm(rho - delta),
        sol.norm_bound,
        sol.divisor_min
    );

    // The stable direction of a saddle with multiplier 0.3.
    let lambda = 0.3;
    let sol = solve_nonresonant(lambda, 1.0, &eta, &shift, rho)?;
    let residual = sol.xi.scale(lambda).sub(&sol.xi.rotate(&shift)?)?.sub(&eta)?;
    println!(
        "lambda xi - xi(. + omega) = eta: residual {:.2e}, |xi| = {:.4e} <= bound {:.4e}",
        residual.to_field().max_abs(),
        sol.xi.strip_norm(rho),
        sol.norm_bound
    );
    Ok(())
}
