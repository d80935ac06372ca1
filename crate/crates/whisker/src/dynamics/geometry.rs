use crate::error::{Error, Result};

/// Symplectic form, compatible almost-complex structure and metric with `Ω = G J`.
///
/// Matrices are written row-major into `out` (size `(2n)^2`).
pub trait Geometry: Sync {
    fn phase_dim(&self) -> usize;
    fn omega(&self, z: &[f64], out: &mut [f64]);
    fn complex_structure(&self, z: &[f64], out: &mut [f64]);
    fn metric(&self, z: &[f64], out: &mut [f64]);
    /// Primitive one-form `a` with `Ω = (Da)^T − Da`.
    fn action_form(&self, z: &[f64], out: &mut [f64]);
    /// Jacobian `Da`, rows indexed by components of `a`.
    fn action_jacobian(&self, z: &[f64], out: &mut [f64]);
    /// True when `Ω`, `J`, `G` do not depend on `z`.
    fn is_constant(&self) -> bool;
}

/// `Ω₀ = J₀ = [[0, −I], [I, 0]]`, `G₀ = I`, `a₀(z) = (0, −q)` in `z = (q, p)`.
#[derive(Debug, Clone, Copy)]
pub struct StandardGeometry {
    pub n: usize,
}

pub fn standard_omega(n: usize) -> Vec<f64> {
    let m = 2 * n;
    let mut out = vec![0.0; m * m];
    for i in 0..n {
        out[i * m + n + i] = -1.0;
        out[(n + i) * m + i] = 1.0;
    }
    out
}

impl Geometry for StandardGeometry {
    fn phase_dim(&self) -> usize {
        2 * self.n
    }

    fn omega(&self, _z: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&standard_omega(self.n));
    }

    fn complex_structure(&self, _z: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&standard_omega(self.n));
    }

    fn metric(&self, _z: &[f64], out: &mut [f64]) {
        let m = 2 * self.n;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            out[i * m + i] = 1.0;
        }
    }

    fn action_form(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            out[i] = 0.0;
            out[n + i] = -z[i];
        }
    }

    fn action_jacobian(&self, _z: &[f64], out: &mut [f64]) {
        let n = self.n;
        let m = 2 * n;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            out[(n + i) * m + i] = -1.0;
        }
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// Maximum violation of the triple identities at `z`:
/// `Ω^T = −Ω`, `J^2 = −I`, `Ω = G J`, `Ω = (Da)^T − Da`.
pub fn check_geometry(geo: &dyn Geometry, z: &[f64], tol: f64) -> Result<f64> {
    let m = geo.phase_dim();
    let mut om = vec![0.0; m * m];
    let mut j = vec![0.0; m * m];
    let mut g = vec![0.0; m * m];
    let mut da = vec![0.0; m * m];
    geo.omega(z, &mut om);
    geo.complex_structure(z, &mut j);
    geo.metric(z, &mut g);
    geo.action_jacobian(z, &mut da);
    let mut worst: f64 = 0.0;
    for r in 0..m {
        for c in 0..m {
            worst = worst.max((om[r * m + c] + om[c * m + r]).abs());
            let jj: f64 = (0..m).map(|k| j[r * m + k] * j[k * m + c]).sum();
            let id = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((jj + id).abs());
            let gj: f64 = (0..m).map(|k| g[r * m + k] * j[k * m + c]).sum();
            worst = worst.max((gj - om[r * m + c]).abs());
            worst = worst.max((da[c * m + r] - da[r * m + c] - om[r * m + c]).abs());
        }
    }
    if worst > tol {
        return Err(Error::Hypothesis(format!(
            "geometric triple violates its identities by {worst:e}"
        )));
    }
    Ok(worst)
}
