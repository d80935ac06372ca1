//! Adapted frames along a torus: tangent frame, normal complement, torsion and the
//! block corrections that make the frame reduce `Dφ_T` to upper-triangular form.

use crate::cohomology::{solve_nonresonant, solve_small_divisor, DiophantineParams};
use crate::dynamics::{Geometry, Hamiltonian};
use crate::error::{Error, Result};
use crate::fourier::{FourierSeries, GridField};
use nalgebra::DMatrix;

/// Condition bound for pointwise inversions.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct FrameOptions {
    /// Also remove the oscillating part of the torsion block.
    pub reduce_torsion: bool,
    pub max_condition: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            reduce_torsion: false,
            max_condition: MAX_CONDITION,
        }
    }
}

/// Everything the Newton steps and the diagnostics need about the frame at `K`.
#[derive(Debug, Clone)]
pub struct Frame {
    pub n: usize,
    pub d: usize,
    pub dtheta_k: FourierSeries,
    pub dphi_k: FourierSeries,
    /// `X∘(K, id) − D_φK α̂`.
    pub flow_dir: GridField,
    /// Field `X∘(K, id)` itself.
    pub field_k: GridField,
    pub l: GridField,
    pub g_l: GridField,
    pub b: GridField,
    pub n0: GridField,
    /// Torsion `(N0∘R)^T Ω(K∘R) Dφ N0`, `n × n`.
    pub s_hat: GridField,
    pub a: GridField,
    pub n_frame: GridField,
    /// `(L | N)`.
    pub p: GridField,
    /// `(L | N0)`.
    pub p_hat: GridField,
    /// Top-left `(n−1) × (n−1)` block of the reduced torsion.
    pub s: GridField,
    pub avg_s: Vec<f64>,
    pub avg_s_inv: Vec<f64>,
    /// Unstable companion of `W`: the last column of `P`.
    pub w_tilde: GridField,
}

/// Sample a matrix-valued function of `z` along an embedding.
pub fn along(
    k: &GridField,
    rows: usize,
    cols: usize,
    f: impl Fn(&[f64], &mut [f64]),
) -> GridField {
    let mut out = GridField::zeros(k.grid(), rows, cols);
    let mut buf = vec![0.0; rows * cols];
    for node in 0..k.nodes() {
        f(&k.at_node(node), &mut buf);
        out.set_node(node, &buf);
    }
    out
}

/// `X∘(K, id)` on the grid.
pub fn field_along(system: &dyn Hamiltonian, k: &GridField) -> GridField {
    let m = system.phase_dim();
    let grid = k.grid();
    let mut out = GridField::zeros(grid, m, 1);
    let mut buf = vec![0.0; m];
    for node in 0..k.nodes() {
        let phi = &grid.node(node)[grid.d()..];
        system.field(&k.at_node(node), phi, &mut buf);
        out.set_node(node, &buf);
    }
    out
}

pub fn rotate_field(f: &GridField, shift: &[f64]) -> Result<GridField> {
    Ok(f.to_series().rotate(shift)?.to_field())
}

/// Tangent frame `L = (D_θK | 𝒳 | W)` with its ingredients.
pub fn tangent_frame(
    system: &dyn Hamiltonian,
    k: &FourierSeries,
    w: &FourierSeries,
) -> Result<(FourierSeries, FourierSeries, GridField, GridField, GridField)> {
    let grid = k.grid();
    let d = grid.d();
    let ell = grid.ell();
    let m = system.phase_dim();
    if k.rows() != m || k.cols() != 1 || w.rows() != m || w.cols() != 1 {
        return Err(Error::Shape("K and W must be 2n x 1".into()));
    }
    if d + 2 != system.half_dim() || ell != system.alpha_hat().len() {
        return Err(Error::Shape(format!(
            "grid with d = {d}, ell = {ell} does not fit a system with n = {}",
            system.half_dim()
        )));
    }
    let dtheta = k.jacobian(0..d)?;
    let dphi = k.jacobian(d..d + ell)?;
    let kv = k.to_field();
    let xk = field_along(system, &kv);
    let ah = GridField::constant(grid, ell, 1, system.alpha_hat());
    let flow_dir = xk.sub(&dphi.to_field().matmul(&ah)?)?;
    let wv = w.to_field();
    let l = if d > 0 {
        GridField::hcat(&[&dtheta.to_field(), &flow_dir, &wv])?
    } else {
        GridField::hcat(&[&flow_dir, &wv])?
    };
    Ok((dtheta, dphi, xk, flow_dir, l))
}

/// Build the adapted frame at `(K, W, λ)` given `Dφ_T` along `K`.
pub fn build_frame(
    system: &dyn Hamiltonian,
    geo: &dyn Geometry,
    k: &FourierSeries,
    w: &FourierSeries,
    lambda: f64,
    dflow: &GridField,
    dio: &DiophantineParams,
    opts: &FrameOptions,
) -> Result<Frame> {
    let grid = k.grid().clone();
    let n = system.half_dim();
    let m = 2 * n;
    let d = grid.d();
    if lambda.abs() >= 1.0 || lambda == 0.0 {
        return Err(Error::Hypothesis(format!(
            "bundle multiplier must satisfy 0 < |λ| < 1, got {lambda}"
        )));
    }
    let shift = dio.shift();
    let shift2 = dio.doubled_shift();
    let (dtheta_k, dphi_k, field_k, flow_dir, l) = tangent_frame(system, k, w)?;
    let kv = k.to_field();
    let kr = rotate_field(&kv, &shift)?;
    let gmat = along(&kv, m, m, |z, o| geo.metric(z, o));
    let jmat = along(&kv, m, m, |z, o| geo.complex_structure(z, o));
    let om_r = along(&kr, m, m, |z, o| geo.omega(z, o));

    let g_l = l.transpose().matmul(&gmat)?.matmul(&l)?;
    let b = g_l.inverse(opts.max_condition)?;
    let n0 = jmat.matmul(&l)?.matmul(&b)?;
    let n0_r = rotate_field(&n0, &shift)?;
    let s_hat = n0_r.transpose().matmul(&om_r)?.matmul(dflow)?.matmul(&n0)?;

    let s1 = s_hat.block(0, n - 1, 0, n - 1);
    let s2 = s_hat.block(0, n - 1, n - 1, n);
    let s3 = s_hat.block(n - 1, n, 0, n - 1);
    let s4 = s_hat.block(n - 1, n, n - 1, n);
    let inv = 1.0 / lambda;

    let a4 = solve_nonresonant(lambda, inv, &s4.to_series().scale(-1.0), &shift, 0.0)?.xi;
    let s3t_r = rotate_field(&s3.transpose(), &shift)?;
    let rhs2 = s2.scale(lambda).add(&s3t_r.scale(inv))?.scale(-1.0);
    let a2 = solve_nonresonant(lambda, inv, &rhs2.to_series(), &shift2, 0.0)?.xi;
    let s2t_r = rotate_field(&s2.transpose(), &shift)?;
    let rhs3 = s3.add(&s2t_r)?.scale(-1.0);
    let a3 = solve_nonresonant(lambda, inv, &rhs3.to_series(), &shift2, 0.0)?.xi;

    let mut a = GridField::zeros(&grid, n, n);
    let mut s = s1.clone();
    if opts.reduce_torsion {
        let s1s = s1.to_series();
        let target = FourierSeries::constant(&grid, n - 1, n - 1, &s1s.average());
        let rhs = target.sub(&s1s)?;
        let a1 = solve_small_divisor(&rhs, dio, &shift, 0.0, 1.0, 1.0)?.xi.to_field();
        let a1t_r = rotate_field(&a1.transpose(), &shift)?;
        s = s1.add(&a1)?.sub(&a1t_r)?;
        a.set_block(0, 0, &a1);
    }
    a.set_block(0, n - 1, &a2.to_field());
    a.set_block(n - 1, 0, &a3.to_field());
    a.set_block(n - 1, n - 1, &a4.to_field());

    let n_frame = n0.add(&l.matmul(&a)?)?;
    let p = GridField::hcat(&[&l, &n_frame])?;
    let p_hat = GridField::hcat(&[&l, &n0])?;
    let avg_s = s.to_series().average();
    let size = n - 1;
    let avg_mat = DMatrix::from_row_slice(size, size, &avg_s);
    let avg_inv = crate::fourier::invert_checked(&avg_mat, opts.max_condition).map_err(|cond| {
        Error::Hypothesis(format!(
            "twist condition fails: average torsion is singular (condition {cond:e})"
        ))
    })?;
    let avg_s_inv: Vec<f64> = (0..size * size)
        .map(|e| avg_inv[(e / size, e % size)])
        .collect();
    let w_tilde = p.block(0, m, m - 1, m);
    Ok(Frame {
        n,
        d,
        dtheta_k,
        dphi_k,
        flow_dir,
        field_k,
        l,
        g_l,
        b,
        n0,
        s_hat,
        a,
        n_frame,
        p,
        p_hat,
        s,
        avg_s,
        avg_s_inv,
        w_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{flow_on_torus, IntegratorOptions, RotatorSaddle, StandardGeometry};
    use crate::fourier::GridSpec;

    fn setup() -> (RotatorSaddle, GridSpec, DiophantineParams) {
        let sys = RotatorSaddle::twisted_saddle(0.6180339887498949, 0.41421356237309515, [0.1, 0.15], 0.3, 0.2);
        let grid = GridSpec::new(1, 1, vec![8, 8]).unwrap();
        let dio = DiophantineParams::measure(&sys.omega(), &sys.alpha(), 2.0, 8).unwrap();
        (sys, grid, dio)
    }

    #[test]
    fn exact_torus_frame_reduces_and_solves_block_equations() {
        let (sys, grid, dio) = setup();
        let geo = StandardGeometry { n: 3 };
        let k = sys.exact_torus(&grid).to_series();
        let w = sys.exact_bundle(&grid).to_series();
        let flow = flow_on_torus(&sys, &k.to_field(), sys.period(), &IntegratorOptions::default()).unwrap();
        let fr = build_frame(&sys, &geo, &k, &w, sys.lambda(), &flow.dphi, &dio, &FrameOptions::default()).unwrap();
        let shift = dio.shift();
        let lam = sys.lambda();
        let n = 3;
        // Block equations for the corrections.
        let s2 = fr.s_hat.block(0, n - 1, n - 1, n);
        let s3 = fr.s_hat.block(n - 1, n, 0, n - 1);
        let s4 = fr.s_hat.block(n - 1, n, n - 1, n);
        let a2 = fr.a.block(0, n - 1, n - 1, n);
        let a3 = fr.a.block(n - 1, n, 0, n - 1);
        let a4 = fr.a.block(n - 1, n, n - 1, n);
        let r = |f: &GridField| rotate_field(f, &shift).unwrap();
        let eq2 = s2.add(&a2).unwrap().sub(&r(&a3.transpose()).scale(1.0 / lam)).unwrap();
        let eq3 = s3.add(&a3.scale(lam)).unwrap().sub(&r(&a2.transpose())).unwrap();
        let eq4 = s4.add(&a4.scale(lam)).unwrap().sub(&r(&a4).scale(1.0 / lam)).unwrap();
        for e in [eq2, eq3, eq4] {
            assert!(e.max_abs() < 1e-11, "{}", e.max_abs());
        }
        // The frame reduces Dφ to block-triangular form.
        let pr = r(&fr.p);
        let red = pr.inverse(1e12).unwrap().matmul(&flow.dphi).unwrap().matmul(&fr.p).unwrap();
        for node in 0..grid.total() {
            let v = red.at_node(node);
            let m = 2 * n;
            for i in 0..m {
                for j in 0..m {
                    let expect = if i == j {
                        if i == n - 1 { lam } else if i == m - 1 { 1.0 / lam } else { 1.0 }
                    } else if i < n - 1 && j >= n && j < m - 1 {
                        v[i * m + j]
                    } else {
                        0.0
                    };
                    assert!((v[i * m + j] - expect).abs() < 1e-8, "({i},{j}) = {}", v[i * m + j]);
                }
            }
        }
        // Unstable companion.
        let wt_r = r(&fr.w_tilde);
        let res = flow.dphi.matmul(&fr.w_tilde).unwrap().sub(&wt_r.scale(1.0 / lam)).unwrap();
        assert!(res.max_abs() < 1e-8);
        // Twist is nondegenerate.
        let det = fr.avg_s[0] * fr.avg_s[3] - fr.avg_s[1] * fr.avg_s[2];
        assert!(det.abs() > 1e-3);
    }

    #[test]
    fn constant_torsion_block_example() {
        // A4 solves λ A4 − λ⁻¹ A4∘R = −s; for λ = 1/2 that is A4 = 2s/3.
        let grid = GridSpec::new(0, 1, vec![8]).unwrap();
        let s = FourierSeries::constant(&grid, 1, 1, &[0.9]);
        let a4 = solve_nonresonant(0.5, 2.0, &s.scale(-1.0), &[0.3], 0.0).unwrap().xi;
        assert!((a4.average()[0] - 0.6).abs() < 1e-15);
    }
}
