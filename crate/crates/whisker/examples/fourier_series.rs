//! Trigonometric polynomials on T^2: sampling, derivatives, rotations, strip norms and dumps.

use std::f64::consts::TAU;
use whisker::fourier::{read_text, write_text, GridField, GridSpec};

fn main() -> anyhow::Result<()> {
    // One internal angle, one external phase, 16 nodes per axis.
    let grid = GridSpec::new(1, 1, vec![16, 16])?;
    let f = GridField::from_fn(&grid, 1, 1, |x, out| {
        out[0] = (TAU * x[0]).cos() + 0.25 * (TAU * (2.0 * x[0] - x[1])).sin();
    })
    .to_series();

    println!("coefficient at (1, 0): {:.6}", f.coeff(0, 0, &[1, 0]));
    println!("coefficient at (2, -1): {:.6}", f.coeff(0, 0, &[2, -1]));
    for rho in [0.0, 0.05, 0.1] {
        println!("strip norm at rho = {rho}: {:.6}", f.strip_norm(rho));
    }

    // d/dθ only touches the first axis; averages of derivatives vanish.
    let df = f.derivative(0)?;
    println!("average of d/dtheta f: {:e}", df.average()[0]);
    let (rho, delta) = (0.1, 0.03);
    println!(
        "Cauchy estimate: |df|_(rho-delta) = {:.4} <= |f|_rho / delta = {:.4}",
        df.strip_norm(rho - delta),
        f.strip_norm(rho) / delta
    );

    // Rotation is a phase shift per mode, so the zero-width norm is unchanged.
    let r = f.rotate(&[0.3, 0.7])?;
    println!("rotated norm {:.12} vs {:.12}", r.strip_norm(0.0), f.strip_norm(0.0));

    // Products are dealiased on a padded grid.
    let sq = f.mul(&f)?;
    println!("average of f^2: {:.6} (exact 0.53125)", sq.average()[0]);

    let mut buf = Vec::new();
    write_text(&f, &mut buf)?;
    let back = read_text(buf.as_slice())?;
    println!("text dump: {} bytes, lossless = {}", buf.len(), back == f);
    Ok(())
}
