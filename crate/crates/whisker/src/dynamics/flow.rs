use super::integrator::{integrate, IntegratorOptions, StepStats};
use super::system::Hamiltonian;
use crate::error::{Error, Result};
use crate::fourier::{GridField, GridSpec};
use rayon::prelude::*;

/// How many derivatives of the time-`T` map to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOrder {
    First,
    Second,
}

/// Time-`T` map at one point with its first and (optionally) second derivatives.
#[derive(Debug, Clone)]
pub struct FlowJet {
    pub phi: Vec<f64>,
    /// `D_z φ_T`, row-major `2n × 2n`.
    pub dphi: Vec<f64>,
    /// `D_z^2 φ_T`, indexed `[i][u][v]`.
    pub d2phi: Option<Vec<f64>>,
    pub stats: StepStats,
}

impl FlowJet {
    /// `D^2 φ_T [a, b]`.
    pub fn second_contract(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let m = a.len();
        let t = self.d2phi.as_ref().expect("second-order jet");
        (0..m)
            .map(|i| {
                let mut acc = 0.0;
                for u in 0..m {
                    let row = &t[(i * m + u) * m..(i * m + u + 1) * m];
                    let s: f64 = row.iter().zip(b).map(|(x, y)| x * y).sum();
                    acc += a[u] * s;
                }
                acc
            })
            .collect()
    }
}

/// Integrate the flow and its variational equations from `(z, φ)` for time `period`.
pub fn flow_jet(
    system: &dyn Hamiltonian,
    z: &[f64],
    phi: &[f64],
    period: f64,
    order: JetOrder,
    opts: &IntegratorOptions,
) -> Result<FlowJet> {
    let m = system.phase_dim();
    if z.len() != m || phi.len() != system.alpha_hat().len() {
        return Err(Error::Shape(format!(
            "flow_jet: state of length {} and {} phases for a system with {} and {}",
            z.len(),
            phi.len(),
            m,
            system.alpha_hat().len()
        )));
    }
    let mm = m * m;
    let second = order == JetOrder::Second;
    let dim = m + mm + if second { mm * m } else { 0 };
    let mut y0 = vec![0.0; dim];
    y0[..m].copy_from_slice(z);
    for i in 0..m {
        y0[m + i * m + i] = 1.0;
    }
    let alpha_hat = system.alpha_hat().to_vec();
    let mut ph = phi.to_vec();
    let mut dx = vec![0.0; mm];
    let mut d2x = vec![0.0; mm * m];
    let mut y_tmp = vec![0.0; mm * m];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        for (p, (p0, a)) in ph.iter_mut().zip(phi.iter().zip(&alpha_hat)) {
            *p = p0 + a * t;
        }
        let state = &y[..m];
        system.field(state, &ph, &mut dy[..m]);
        system.jacobian(state, &ph, &mut dx);
        let mat = &y[m..m + mm];
        // D(φ)' = DX · Dφ
        for i in 0..m {
            for c in 0..m {
                let mut acc = 0.0;
                for a in 0..m {
                    acc += dx[i * m + a] * mat[a * m + c];
                }
                dy[m + i * m + c] = acc;
            }
        }
        if second {
            system.field_hessian(state, &ph, &mut d2x);
            let ten = &y[m + mm..];
            // Y[i][a][v] = Σ_b D²X[i][a][b] Dφ[b][v]
            for ia in 0..mm {
                let row = &d2x[ia * m..(ia + 1) * m];
                for v in 0..m {
                    let mut acc = 0.0;
                    for b in 0..m {
                        acc += row[b] * mat[b * m + v];
                    }
                    y_tmp[ia * m + v] = acc;
                }
            }
            let out = &mut dy[m + mm..];
            for i in 0..m {
                for u in 0..m {
                    for v in 0..m {
                        let mut acc = 0.0;
                        for a in 0..m {
                            acc += dx[i * m + a] * ten[(a * m + u) * m + v]
                                + y_tmp[(i * m + a) * m + v] * mat[a * m + u];
                        }
                        out[(i * m + u) * m + v] = acc;
                    }
                }
            }
        }
    };
    let radius = opts.escape_radius;
    let (y, stats) = integrate(rhs, 0.0, period, &y0, opts, |y| {
        y[..m].iter().all(|v| v.is_finite() && v.abs() <= radius)
    })?;
    Ok(FlowJet {
        phi: y[..m].to_vec(),
        dphi: y[m..m + mm].to_vec(),
        d2phi: second.then(|| y[m + mm..].to_vec()),
        stats,
    })
}

/// Jets of the time-`T` map at every node of a torus sampled on a grid.
#[derive(Debug, Clone)]
pub struct TorusFlow {
    pub phi: GridField,
    pub dphi: GridField,
    pub stats: StepStats,
}

fn external_phases(grid: &GridSpec, node: usize) -> Vec<f64> {
    grid.node(node)[grid.d()..].to_vec()
}

/// `φ_T(K(θ, φ), φ)` and `D_z φ_T` at every grid node, node-parallel.
pub fn flow_on_torus(
    system: &dyn Hamiltonian,
    k: &GridField,
    period: f64,
    opts: &IntegratorOptions,
) -> Result<TorusFlow> {
    let grid = k.grid();
    let m = system.phase_dim();
    if k.rows() != m || k.cols() != 1 {
        return Err(Error::Shape("torus must be a 2n x 1 field".into()));
    }
    let jets: Vec<FlowJet> = (0..grid.total())
        .into_par_iter()
        .map(|node| {
            flow_jet(
                system,
                &k.at_node(node),
                &external_phases(grid, node),
                period,
                JetOrder::First,
                opts,
            )
        })
        .collect::<Result<_>>()?;
    let mut phi = GridField::zeros(grid, m, 1);
    let mut dphi = GridField::zeros(grid, m, m);
    let mut stats = StepStats::default();
    for (node, jet) in jets.iter().enumerate() {
        phi.set_node(node, &jet.phi);
        dphi.set_node(node, &jet.dphi);
        stats.accepted += jet.stats.accepted;
        stats.rejected += jet.stats.rejected;
        stats.evaluations += jet.stats.evaluations;
    }
    Ok(TorusFlow { phi, dphi, stats })
}

/// `D²φ_T(z)[a, b]` for fixed directions, integrating only the directional variations
/// `Dφ a`, `Dφ b` and their second-order companion.
pub fn directional_second_variation(
    system: &dyn Hamiltonian,
    z: &[f64],
    phi: &[f64],
    a: &[f64],
    b: &[f64],
    period: f64,
    opts: &IntegratorOptions,
) -> Result<(Vec<f64>, StepStats)> {
    let m = system.phase_dim();
    if z.len() != m || a.len() != m || b.len() != m || phi.len() != system.alpha_hat().len() {
        return Err(Error::Shape("directional_second_variation: length mismatch".into()));
    }
    let mut y0 = vec![0.0; 4 * m];
    y0[..m].copy_from_slice(z);
    y0[m..2 * m].copy_from_slice(a);
    y0[2 * m..3 * m].copy_from_slice(b);
    let alpha_hat = system.alpha_hat().to_vec();
    let mut ph = phi.to_vec();
    let mut dx = vec![0.0; m * m];
    let mut d2x = vec![0.0; m * m * m];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        for (p, (p0, al)) in ph.iter_mut().zip(phi.iter().zip(&alpha_hat)) {
            *p = p0 + al * t;
        }
        let state = &y[..m];
        system.field(state, &ph, &mut dy[..m]);
        system.jacobian(state, &ph, &mut dx);
        system.field_hessian(state, &ph, &mut d2x);
        let (va, rest) = y[m..].split_at(m);
        let (vb, w) = rest.split_at(m);
        for i in 0..m {
            let row = &dx[i * m..(i + 1) * m];
            let mut sa = 0.0;
            let mut sb = 0.0;
            let mut sw = 0.0;
            let mut quad = 0.0;
            for u in 0..m {
                sa += row[u] * va[u];
                sb += row[u] * vb[u];
                sw += row[u] * w[u];
                let hrow = &d2x[(i * m + u) * m..(i * m + u + 1) * m];
                let hb: f64 = hrow.iter().zip(vb).map(|(h, v)| h * v).sum();
                quad += va[u] * hb;
            }
            dy[m + i] = sa;
            dy[2 * m + i] = sb;
            dy[3 * m + i] = sw + quad;
        }
    };
    let radius = opts.escape_radius;
    let (y, stats) = integrate(rhs, 0.0, period, &y0, opts, |y| {
        y[..m].iter().all(|v| v.is_finite() && v.abs() <= radius)
    })?;
    Ok((y[3 * m..].to_vec(), stats))
}

/// `D^2 φ_T(points)[a, b]` at every grid node.
pub fn second_variation_on_torus(
    system: &dyn Hamiltonian,
    points: &GridField,
    a: &GridField,
    b: &GridField,
    period: f64,
    opts: &IntegratorOptions,
) -> Result<GridField> {
    let grid = points.grid();
    let m = system.phase_dim();
    let cols = b.cols();
    let rows: Vec<Vec<f64>> = (0..grid.total())
        .into_par_iter()
        .map(|node| {
            let z = points.at_node(node);
            let phases = external_phases(grid, node);
            let av = a.at_node(node);
            let bv = b.at_node(node);
            let mut out = vec![0.0; m * cols];
            for c in 0..cols {
                let bc: Vec<f64> = (0..m).map(|r| bv[r * cols + c]).collect();
                let (v, _) = directional_second_variation(system, &z, &phases, &av, &bc, period, opts)?;
                for r in 0..m {
                    out[r * cols + c] = v[r];
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut field = GridField::zeros(grid, m, cols);
    for (node, v) in rows.iter().enumerate() {
        field.set_node(node, v);
    }
    Ok(field)
}
