use super::fft::fft_nd;
use super::field::GridField;
use super::grid::{l1, GridSpec};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Real matrix-valued Fourier series truncated to a grid band.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    grid: GridSpec,
    rows: usize,
    cols: usize,
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn zeros(grid: &GridSpec, rows: usize, cols: usize) -> Self {
        Self {
            grid: grid.clone(),
            rows,
            cols,
            coeffs: vec![Complex64::default(); rows * cols * grid.total()],
        }
    }

    /// Constant series with a row-major matrix value.
    pub fn constant(grid: &GridSpec, rows: usize, cols: usize, value: &[f64]) -> Self {
        assert_eq!(value.len(), rows * cols);
        let mut s = Self::zeros(grid, rows, cols);
        for (e, v) in value.iter().enumerate() {
            s.coeffs[e * grid.total()] = Complex64::new(*v, 0.0);
        }
        s
    }

    /// Build from raw coefficients (entry-major, FFT order); Hermitian symmetry is enforced.
    pub fn from_coeffs(
        grid: &GridSpec,
        rows: usize,
        cols: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if coeffs.len() != rows * cols * grid.total() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                rows * cols * grid.total(),
                coeffs.len()
            )));
        }
        let mut s = Self {
            grid: grid.clone(),
            rows,
            cols,
            coeffs,
        };
        s.symmetrize();
        Ok(s)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn entry(&self, r: usize, c: usize) -> &[Complex64] {
        let n = self.grid.total();
        let e = r * self.cols + c;
        &self.coeffs[e * n..(e + 1) * n]
    }

    fn entry_mut(&mut self, r: usize, c: usize) -> &mut [Complex64] {
        let n = self.grid.total();
        let e = r * self.cols + c;
        &mut self.coeffs[e * n..(e + 1) * n]
    }

    /// Coefficient of a signed mode, zero if outside the grid.
    pub fn coeff(&self, r: usize, c: usize, mode: &[i64]) -> Complex64 {
        self.grid
            .position(mode)
            .map(|p| self.entry(r, c)[p])
            .unwrap_or_default()
    }

    pub fn set_coeff(&mut self, r: usize, c: usize, mode: &[i64], value: Complex64) -> Result<()> {
        let p = self
            .grid
            .position(mode)
            .ok_or_else(|| Error::Shape(format!("mode {mode:?} outside grid")))?;
        let q = self.grid.conjugate_position(p);
        let e = self.entry_mut(r, c);
        e[p] = value;
        e[q] = value.conj();
        if p == q {
            e[p] = Complex64::new(value.re, 0.0);
        }
        Ok(())
    }

    /// Replace each pair `(c_m, c_{-m})` by its Hermitian part.
    pub fn symmetrize(&mut self) {
        let n = self.grid.total();
        let conj: Vec<usize> = (0..n).map(|p| self.grid.conjugate_position(p)).collect();
        for e in 0..self.rows * self.cols {
            let block = &mut self.coeffs[e * n..(e + 1) * n];
            for p in 0..n {
                let q = conj[p];
                if q < p {
                    continue;
                }
                let avg = 0.5 * (block[p] + block[q].conj());
                block[p] = avg;
                block[q] = avg.conj();
            }
        }
    }

    /// Zero every mode with a Nyquist component.
    pub fn project_band(&mut self) {
        let n = self.grid.total();
        let nyq: Vec<bool> = (0..n).map(|p| self.grid.is_nyquist(p)).collect();
        for e in 0..self.rows * self.cols {
            for p in 0..n {
                if nyq[p] {
                    self.coeffs[e * n + p] = Complex64::default();
                }
            }
        }
    }

    /// Keep only modes with `|m_i| ≤ N_i/2 − guard` in every direction.
    pub fn low_pass(&self, guard: usize) -> Self {
        let n = self.grid.total();
        let cut: Vec<i64> = self.grid.sizes().iter().map(|&s| (s / 2) as i64 - guard as i64).collect();
        let keep: Vec<bool> = (0..n)
            .map(|p| {
                !self.grid.is_nyquist(p)
                    && self.grid.mode(p).iter().zip(&cut).all(|(m, c)| m.abs() <= *c)
            })
            .collect();
        let mut out = self.clone();
        for e in 0..self.rows * self.cols {
            for p in 0..n {
                if !keep[p] {
                    out.coeffs[e * n + p] = Complex64::default();
                }
            }
        }
        out
    }

    pub fn is_band_limited(&self) -> bool {
        let n = self.grid.total();
        (0..n)
            .filter(|&p| self.grid.is_nyquist(p))
            .all(|p| (0..self.rows * self.cols).all(|e| self.coeffs[e * n + p].norm() == 0.0))
    }

    /// Forward transform of grid samples: `f̂_m = N^{-1} Σ v(x) e^{-2πi m·x}`.
    pub fn from_field(field: &GridField) -> Self {
        let grid = field.grid().clone();
        let n = grid.total();
        let mut coeffs = Vec::with_capacity(field.data().len());
        let scale = 1.0 / n as f64;
        for e in 0..field.rows() * field.cols() {
            let mut buf: Vec<Complex64> = field.data()[e * n..(e + 1) * n]
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            fft_nd(&mut buf, grid.sizes(), false);
            coeffs.extend(buf.into_iter().map(|c| c * scale));
        }
        let mut s = Self {
            grid,
            rows: field.rows(),
            cols: field.cols(),
            coeffs,
        };
        s.symmetrize();
        s
    }

    /// Inverse transform back to samples on the grid.
    pub fn to_field(&self) -> GridField {
        let n = self.grid.total();
        let mut data = Vec::with_capacity(self.coeffs.len());
        for e in 0..self.rows * self.cols {
            let mut buf = self.coeffs[e * n..(e + 1) * n].to_vec();
            fft_nd(&mut buf, self.grid.sizes(), true);
            data.extend(buf.into_iter().map(|c| c.re));
        }
        GridField::from_data(&self.grid, self.rows, self.cols, data).expect("shape preserved")
    }

    /// Direct evaluation of the trigonometric sum at an arbitrary point (in turns).
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let n = self.grid.total();
        let phases: Vec<Complex64> = (0..n)
            .map(|p| {
                let m = self.grid.mode(p);
                let mut arg: f64 = m.iter().zip(x).map(|(&mi, &xi)| mi as f64 * xi).sum();
                arg *= 2.0 * PI;
                if self.grid.is_nyquist(p) {
                    // Nyquist content is read as a cosine so evaluation stays real.
                    Complex64::new(nyquist_cos(&self.grid, p, x), 0.0)
                } else {
                    Complex64::from_polar(1.0, arg)
                }
            })
            .collect();
        (0..self.rows * self.cols)
            .map(|e| {
                self.coeffs[e * n..(e + 1) * n]
                    .iter()
                    .zip(&phases)
                    .map(|(c, ph)| (c * ph).re)
                    .sum()
            })
            .collect()
    }

    /// Multiply each coefficient by `e^{2πi m·shift}`; the result is band-limited.
    pub fn rotate(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.grid.dims() {
            return Err(Error::Shape(format!(
                "rotation has {} components for a {}-dimensional grid",
                shift.len(),
                self.grid.dims()
            )));
        }
        let factors: Vec<Complex64> = (0..self.grid.total())
            .map(|p| {
                if self.grid.is_nyquist(p) {
                    return Complex64::default();
                }
                let m = self.grid.mode(p);
                let arg: f64 = m.iter().zip(shift).map(|(&mi, &s)| mi as f64 * s).sum();
                Complex64::from_polar(1.0, 2.0 * PI * arg)
            })
            .collect();
        Ok(self.map_modes(&factors))
    }

    /// Partial derivative along one axis (angles in turns).
    pub fn derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.grid.dims() {
            return Err(Error::Shape(format!("no axis {axis}")));
        }
        let factors: Vec<Complex64> = (0..self.grid.total())
            .map(|p| {
                if self.grid.is_nyquist(p) {
                    return Complex64::default();
                }
                let m = self.grid.mode(p)[axis];
                Complex64::new(0.0, 2.0 * PI * m as f64)
            })
            .collect();
        Ok(self.map_modes(&factors))
    }

    /// Jacobian with respect to a contiguous range of axes, stacked as columns.
    /// Requires a column vector series.
    pub fn jacobian(&self, axes: std::ops::Range<usize>) -> Result<Self> {
        if self.cols != 1 {
            return Err(Error::Shape("jacobian needs a column vector".into()));
        }
        let mut out = Self::zeros(&self.grid, self.rows, axes.len());
        for (c, axis) in axes.enumerate() {
            let d = self.derivative(axis)?;
            for r in 0..self.rows {
                out.entry_mut(r, c).copy_from_slice(d.entry(r, 0));
            }
        }
        Ok(out)
    }

    pub(crate) fn map_modes(&self, factors: &[Complex64]) -> Self {
        let n = self.grid.total();
        let mut out = self.clone();
        for e in 0..self.rows * self.cols {
            for p in 0..n {
                out.coeffs[e * n + p] *= factors[p];
            }
        }
        out
    }

    /// Weighted-ℓ1 norm `Σ_m |f̂_m| e^{2πρ|m|_1}` of each entry.
    pub fn entry_norms(&self, rho: f64) -> Vec<f64> {
        let n = self.grid.total();
        let weights: Vec<f64> = (0..n)
            .map(|p| (2.0 * PI * rho * l1(&self.grid.mode(p)) as f64).exp())
            .collect();
        (0..self.rows * self.cols)
            .map(|e| {
                self.coeffs[e * n..(e + 1) * n]
                    .iter()
                    .zip(&weights)
                    .map(|(c, w)| c.norm() * w)
                    .sum()
            })
            .collect()
    }

    /// Strip norm: max row sum of the entry norms.
    pub fn strip_norm(&self, rho: f64) -> f64 {
        let norms = self.entry_norms(rho);
        (0..self.rows)
            .map(|r| norms[r * self.cols..(r + 1) * self.cols].iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Weighted mass of modes in the outer quarter of the band, a proxy for truncation error.
    pub fn truncation_indicator(&self, rho: f64) -> f64 {
        let n = self.grid.total();
        let sizes = self.grid.sizes();
        let outer: Vec<Option<f64>> = (0..n)
            .map(|p| {
                let m = self.grid.mode(p);
                let out = m
                    .iter()
                    .zip(sizes)
                    .any(|(&mi, &ni)| 4 * mi.unsigned_abs() as usize > 3 * (ni / 2));
                out.then(|| (2.0 * PI * rho * l1(&m) as f64).exp())
            })
            .collect();
        (0..self.rows * self.cols)
            .map(|e| {
                self.coeffs[e * n..(e + 1) * n]
                    .iter()
                    .zip(&outer)
                    .filter_map(|(c, w)| w.map(|w| c.norm() * w))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Torus average, row-major.
    pub fn average(&self) -> Vec<f64> {
        let n = self.grid.total();
        (0..self.rows * self.cols)
            .map(|e| self.coeffs[e * n].re)
            .collect()
    }

    /// Remove the average (zero mode) from every entry.
    pub fn without_average(&self) -> Self {
        let n = self.grid.total();
        let mut out = self.clone();
        for e in 0..self.rows * self.cols {
            out.coeffs[e * n] = Complex64::default();
        }
        out
    }

    /// Add a constant matrix to the average.
    pub fn add_constant(&self, value: &[f64]) -> Self {
        assert_eq!(value.len(), self.rows * self.cols);
        let n = self.grid.total();
        let mut out = self.clone();
        for (e, v) in value.iter().enumerate() {
            out.coeffs[e * n] += Complex64::new(*v, 0.0);
        }
        out
    }

    fn check_same(&self, other: &Self, op: &str) -> Result<()> {
        if self.grid != other.grid || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{op}: {}x{} on {:?} vs {}x{} on {:?}",
                self.rows,
                self.cols,
                self.grid.sizes(),
                other.rows,
                other.cols,
                other.grid.sizes()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "add")?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "sub")?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|a| *a *= s);
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(&self.grid, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entry_mut(j, i).copy_from_slice(self.entry(i, j));
            }
        }
        out
    }

    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        let mut out = Self::zeros(&self.grid, r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                out.entry_mut(i - r0, j - c0).copy_from_slice(self.entry(i, j));
            }
        }
        out
    }

    pub fn vcat(parts: &[&Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("vcat of nothing".into()))?;
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = Self::zeros(&first.grid, rows, first.cols);
        let mut r0 = 0;
        for p in parts {
            if p.cols != first.cols || p.grid != first.grid {
                return Err(Error::Shape("vcat: column mismatch".into()));
            }
            for i in 0..p.rows {
                for j in 0..p.cols {
                    out.entry_mut(r0 + i, j).copy_from_slice(p.entry(i, j));
                }
            }
            r0 += p.rows;
        }
        Ok(out)
    }

    /// Zero-pad (or truncate) the coefficient block onto another grid with the same axes.
    pub fn resample(&self, target: &GridSpec) -> Result<Self> {
        if target.d() != self.grid.d() || target.ell() != self.grid.ell() {
            return Err(Error::Shape("resample across different torus dimensions".into()));
        }
        let mut out = Self::zeros(target, self.rows, self.cols);
        let n = self.grid.total();
        let nt = target.total();
        for p in 0..n {
            if self.grid.is_nyquist(p) {
                continue;
            }
            let m = self.grid.mode(p);
            let Some(q) = target.position(&m) else { continue };
            if target.is_nyquist(q) {
                continue;
            }
            for e in 0..self.rows * self.cols {
                out.coeffs[e * nt + q] = self.coeffs[e * n + p];
            }
        }
        Ok(out)
    }

    /// Pointwise product evaluated on a grid padded by a factor of two, then truncated back.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid || self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let fine = self.grid.scaled(2);
        let a = self.resample(&fine)?.to_field();
        let b = other.resample(&fine)?.to_field();
        a.matmul(&b)?.to_series().resample(&self.grid)
    }

    /// Entrywise product (Hadamard) with anti-aliasing; shapes must agree.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "mul")?;
        let fine = self.grid.scaled(2);
        let a = self.resample(&fine)?.to_field();
        let b = other.resample(&fine)?.to_field();
        let prod: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
        GridField::from_data(&fine, self.rows, self.cols, prod)?
            .to_series()
            .resample(&self.grid)
    }

    /// Product with a scalar series (1x1), broadcast over entries.
    pub fn scalar_mul(&self, s: &Self) -> Result<Self> {
        if s.rows != 1 || s.cols != 1 || s.grid != self.grid {
            return Err(Error::Shape("scalar_mul expects a 1x1 series".into()));
        }
        let fine = self.grid.scaled(2);
        let a = self.resample(&fine)?.to_field();
        let b = s.resample(&fine)?.to_field();
        let nn = fine.total();
        let prod: Vec<f64> = a
            .data()
            .iter()
            .enumerate()
            .map(|(i, x)| x * b.data()[i % nn])
            .collect();
        GridField::from_data(&fine, self.rows, self.cols, prod)?
            .to_series()
            .resample(&self.grid)
    }

    /// Compose a function with an embedding: `f(K(x), x)` sampled on the grid.
    pub fn compose(
        &self,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(&[f64], &[f64], &mut [f64]),
    ) -> Self {
        let values = self.to_field();
        let mut out = GridField::zeros(&self.grid, rows, cols);
        let mut buf = vec![0.0; rows * cols];
        for node in 0..self.grid.total() {
            let z = values.at_node(node);
            let x = self.grid.node(node);
            buf.iter_mut().for_each(|v| *v = 0.0);
            f(&z, &x, &mut buf);
            out.set_node(node, &buf);
        }
        out.to_series()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

fn nyquist_cos(grid: &GridSpec, p: usize, x: &[f64]) -> f64 {
    let m = grid.mode(p);
    let mut v = 1.0;
    let mut arg = 0.0;
    for (a, (&mi, &xi)) in m.iter().zip(x).enumerate() {
        if mi.unsigned_abs() as usize == grid.sizes()[a] / 2 {
            v *= (2.0 * PI * mi as f64 * xi).cos();
        } else {
            arg += mi as f64 * xi;
        }
    }
    v * (2.0 * PI * arg).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &GridSpec, rows: usize, cols: usize, seed: u64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridField::from_fn(grid, rows, cols, |_, out| {
            out.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0))
        })
    }

    fn random_band(grid: &GridSpec, rows: usize, cols: usize, seed: u64, decay: f64) -> FourierSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.total();
        let mut s = FourierSeries::zeros(grid, rows, cols);
        for e in 0..rows * cols {
            for p in 0..n {
                let w = (-decay * l1(&grid.mode(p)) as f64).exp();
                s.coeffs[e * n + p] =
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w;
            }
        }
        s.symmetrize();
        s.project_band();
        s
    }

    /// Direct O(N^2) DFT used as an oracle for the FFT path.
    fn naive_dft(grid: &GridSpec, values: &[f64]) -> Vec<Complex64> {
        let n = grid.total();
        (0..n)
            .map(|p| {
                let m = grid.mode(p);
                let mut acc = Complex64::default();
                for (node, v) in values.iter().enumerate() {
                    let x = grid.node(node);
                    let arg: f64 = m.iter().zip(&x).map(|(&mi, &xi)| mi as f64 * xi).sum();
                    acc += v * Complex64::from_polar(1.0, -2.0 * PI * arg);
                }
                acc / n as f64
            })
            .collect()
    }

    #[test]
    fn low_pass_keeps_inner_modes() {
        let g = GridSpec::new(1, 1, vec![12, 8]).unwrap();
        let mut f = FourierSeries::zeros(&g, 1, 1);
        f.set_coeff(0, 0, &[4, 1], Complex64::new(1.0, 0.0)).unwrap();
        f.set_coeff(0, 0, &[5, 1], Complex64::new(1.0, 0.0)).unwrap();
        f.set_coeff(0, 0, &[1, 3], Complex64::new(1.0, 0.0)).unwrap();
        let lp = f.low_pass(2);
        assert_eq!(lp.coeff(0, 0, &[4, 1]).re, 1.0);
        assert_eq!(lp.coeff(0, 0, &[-4, -1]).re, 1.0);
        assert_eq!(lp.coeff(0, 0, &[5, 1]).re, 0.0);
        assert_eq!(lp.coeff(0, 0, &[1, 3]).re, 0.0);
    }

    #[test]
    fn fft_matches_direct_dft() {
        let g = GridSpec::new(0, 1, vec![16]).unwrap();
        let f = random_field(&g, 1, 1, 1);
        let s = f.to_series();
        let oracle = naive_dft(&g, f.data());
        for (a, b) in s.coeffs().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-14);
        }
        let g2 = GridSpec::new(1, 1, vec![8, 6]).unwrap();
        let f2 = random_field(&g2, 1, 1, 2);
        let oracle2 = naive_dft(&g2, f2.data());
        for (a, b) in f2.to_series().coeffs().iter().zip(&oracle2) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn round_trip_is_exact_to_rounding() {
        let g = GridSpec::new(1, 1, vec![16, 8]).unwrap();
        let f = random_field(&g, 2, 3, 3);
        let back = f.to_series().to_field();
        let err = back.sub(&f).unwrap().max_abs();
        assert!(err <= 1e-13 * f.max_abs());
    }

    #[test]
    fn single_cosine_mode() {
        let g = GridSpec::new(0, 1, vec![8]).unwrap();
        let f = GridField::from_fn(&g, 1, 1, |x, out| out[0] = (2.0 * PI * x[0]).cos());
        let s = f.to_series();
        assert!((s.coeff(0, 0, &[1]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((s.coeff(0, 0, &[-1]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let rest: f64 = (0..8)
            .filter(|&p| l1(&g.mode(p)) != 1)
            .map(|p| s.entry(0, 0)[p].norm())
            .sum();
        assert!(rest < 1e-15);
    }

    #[test]
    fn derivative_of_sine_and_norm() {
        let g = GridSpec::new(0, 1, vec![8]).unwrap();
        let f = GridField::from_fn(&g, 1, 1, |x, out| out[0] = (2.0 * PI * x[0]).sin());
        let d = f.to_series().derivative(0).unwrap();
        let expect = GridField::from_fn(&g, 1, 1, |x, out| out[0] = 2.0 * PI * (2.0 * PI * x[0]).cos());
        assert!(d.to_field().sub(&expect).unwrap().max_abs() < 1e-13);

        let c = GridField::from_fn(&g, 1, 1, |x, out| out[0] = (2.0 * PI * x[0]).cos()).to_series();
        let rho = 0.1;
        assert!((c.strip_norm(rho) - (2.0 * PI * rho).exp()).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let g = GridSpec::new(1, 1, vec![16, 16]).unwrap();
        let s = random_band(&g, 1, 1, 7, 0.8);
        let d = s.derivative(1).unwrap();
        let h = 1e-5;
        for x in [[0.13, 0.71], [0.5, 0.25], [0.9, 0.05]] {
            let fp = s.evaluate(&[x[0], x[1] + h])[0];
            let fm = s.evaluate(&[x[0], x[1] - h])[0];
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - d.evaluate(&x)[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn rotation_composes_and_preserves_norm() {
        let g = GridSpec::new(1, 1, vec![16, 8]).unwrap();
        let s = random_band(&g, 2, 1, 4, 0.3);
        let w = [0.3819660112501051, 0.41421356237309515];
        let twice = s.rotate(&w).unwrap().rotate(&w).unwrap();
        let once = s.rotate(&[2.0 * w[0], 2.0 * w[1]]).unwrap();
        assert!(twice.sub(&once).unwrap().max_abs_coeff() < 1e-14);
        let n0 = s.strip_norm(0.0);
        assert!((s.rotate(&w).unwrap().strip_norm(0.0) - n0).abs() < 1e-13 * n0);
        let x = [0.2, 0.7];
        let shifted = s.evaluate(&[x[0] + w[0], x[1] + w[1]]);
        let rotated = s.rotate(&w).unwrap().evaluate(&x);
        assert!((shifted[1] - rotated[1]).abs() < 1e-13);
    }

    #[test]
    fn padded_product_matches_convolution() {
        let g = GridSpec::new(0, 1, vec![16]).unwrap();
        let f = random_band(&g, 1, 1, 5, 0.0).resample(&GridSpec::new(0, 1, vec![8]).unwrap())
            .unwrap()
            .resample(&g)
            .unwrap();
        let h = random_band(&g, 1, 1, 6, 0.0).resample(&GridSpec::new(0, 1, vec![8]).unwrap())
            .unwrap()
            .resample(&g)
            .unwrap();
        let prod = f.mul(&h).unwrap();
        for m in -7i64..=7 {
            let mut conv = Complex64::default();
            for k in -7i64..=7 {
                conv += f.coeff(0, 0, &[k]) * h.coeff(0, 0, &[m - k]);
            }
            assert!((prod.coeff(0, 0, &[m]) - conv).norm() < 1e-14, "mode {m}");
        }
    }

    #[test]
    fn transpose_and_shape_checks() {
        let g = GridSpec::new(1, 1, vec![4, 4]).unwrap();
        let a = random_band(&g, 2, 3, 8, 0.5);
        assert_eq!(a.transpose().transpose(), a);
        let b = random_band(&g, 2, 3, 9, 0.5);
        assert!(a.matmul(&b).is_err());
        let other = GridSpec::new(1, 1, vec![8, 4]).unwrap();
        assert!(a.add(&FourierSeries::zeros(&other, 2, 3)).is_err());
    }

    #[test]
    fn compose_samples_embedding() {
        let g = GridSpec::new(1, 1, vec![8, 8]).unwrap();
        let k = GridField::from_fn(&g, 2, 1, |x, out| {
            out[0] = (2.0 * PI * x[0]).cos();
            out[1] = (2.0 * PI * x[1]).sin();
        })
        .to_series();
        let sq = k.compose(1, 1, |z, _, out| out[0] = z[0] * z[0] + z[1] * z[1]);
        let expect = 0.5 * 2.0;
        assert!((sq.average()[0] - expect).abs() < 1e-14);
    }

    fn hermitian_defect(s: &FourierSeries) -> f64 {
        let g = s.grid();
        let n = g.total();
        let mut worst: f64 = 0.0;
        for e in 0..s.rows() * s.cols() {
            let c = &s.coeffs()[e * n..(e + 1) * n];
            for p in 0..n {
                worst = worst.max((c[p] - c[g.conjugate_position(p)].conj()).norm());
            }
        }
        worst
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn grid_strategy() -> impl Strategy<Value = GridSpec> {
            prop_oneof![
                (2usize..6).prop_map(|k| GridSpec::new(0, 1, vec![2 * k]).unwrap()),
                (2usize..5, 2usize..5).prop_map(|(a, b)| GridSpec::new(1, 1, vec![2 * a, 2 * b]).unwrap()),
                (1usize..3, 1usize..3, 1usize..3)
                    .prop_map(|(a, b, c)| GridSpec::new(2, 1, vec![4 * a, 4 * b, 4 * c]).unwrap()),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn values_and_coefficients_round_trip(g in grid_strategy(), seed in any::<u64>()) {
                let s = random_band(&g, 2, 1, seed, 0.3);
                let back = s.to_field().to_series();
                let scale = s.max_abs_coeff().max(1e-300);
                prop_assert!(back.sub(&s).unwrap().max_abs_coeff() <= 1e-13 * scale);
            }

            #[test]
            fn rotation_is_an_isometry_at_zero_width(g in grid_strategy(), seed in any::<u64>(), t in prop::collection::vec(-1.0f64..1.0, 3)) {
                let s = random_band(&g, 1, 2, seed, 0.2);
                let r = s.rotate(&t[..g.dims()]).unwrap();
                prop_assert!((r.strip_norm(0.0) - s.strip_norm(0.0)).abs() <= 1e-13 * s.strip_norm(0.0));
                prop_assert!(hermitian_defect(&r) <= 1e-13 * s.max_abs_coeff());
            }

            #[test]
            fn cauchy_estimate(g in grid_strategy(), seed in any::<u64>(), rho in 0.01f64..0.3, frac in 0.01f64..0.99, axis in 0usize..3) {
                let axis = axis % g.dims();
                let delta = frac * rho;
                let s = random_band(&g, 1, 1, seed, 0.5);
                let ds = s.derivative(axis).unwrap();
                prop_assert!(ds.strip_norm(rho - delta) <= s.strip_norm(rho) / delta * (1.0 + 1e-10));
                prop_assert_eq!(ds.average()[0], 0.0);
                prop_assert!(hermitian_defect(&ds) <= 1e-12 * ds.max_abs_coeff().max(1e-300));
            }

            #[test]
            fn products_stay_real(g in grid_strategy(), seed in any::<u64>()) {
                let a = random_band(&g, 2, 2, seed, 0.4);
                let b = random_band(&g, 2, 1, seed ^ 0xabc, 0.4);
                let p = a.matmul(&b).unwrap();
                prop_assert!(hermitian_defect(&p) <= 1e-13 * p.max_abs_coeff().max(1e-300));
            }
        }
    }
}
