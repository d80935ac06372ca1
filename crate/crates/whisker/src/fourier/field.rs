use super::grid::GridSpec;
use super::series::FourierSeries;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Matrix-valued samples on a grid, stored entry-major: `data[entry * nodes + node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: GridSpec,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: &GridSpec, rows: usize, cols: usize) -> Self {
        let data = vec![0.0; rows * cols * grid.total()];
        Self {
            grid: grid.clone(),
            rows,
            cols,
            data,
        }
    }

    pub fn from_data(grid: &GridSpec, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols * grid.total() {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                rows * cols * grid.total(),
                data.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            rows,
            cols,
            data,
        })
    }

    /// Fill node by node; `f(x, out)` receives the node angles and a row-major matrix buffer.
    pub fn from_fn(
        grid: &GridSpec,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(&[f64], &mut [f64]),
    ) -> Self {
        let mut field = Self::zeros(grid, rows, cols);
        let mut buf = vec![0.0; rows * cols];
        for node in 0..grid.total() {
            buf.iter_mut().for_each(|v| *v = 0.0);
            f(&grid.node(node), &mut buf);
            field.set_node(node, &buf);
        }
        field
    }

    pub fn constant(grid: &GridSpec, rows: usize, cols: usize, value: &[f64]) -> Self {
        assert_eq!(value.len(), rows * cols);
        Self::from_fn(grid, rows, cols, |_, out| out.copy_from_slice(value))
    }

    pub fn identity(grid: &GridSpec, n: usize) -> Self {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Self::constant(grid, n, n, &id)
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

    pub fn nodes(&self) -> usize {
        self.grid.total()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn entry(&self, r: usize, c: usize) -> &[f64] {
        let n = self.nodes();
        let e = r * self.cols + c;
        &self.data[e * n..(e + 1) * n]
    }

    pub fn entry_mut(&mut self, r: usize, c: usize) -> &mut [f64] {
        let n = self.nodes();
        let e = r * self.cols + c;
        &mut self.data[e * n..(e + 1) * n]
    }

    /// Row-major matrix at one node.
    pub fn at_node(&self, node: usize) -> Vec<f64> {
        let n = self.nodes();
        (0..self.rows * self.cols)
            .map(|e| self.data[e * n + node])
            .collect()
    }

    pub fn set_node(&mut self, node: usize, value: &[f64]) {
        let n = self.nodes();
        for (e, v) in value.iter().enumerate() {
            self.data[e * n + node] = *v;
        }
    }

    fn check_same(&self, other: &Self, op: &str) -> Result<()> {
        if self.grid != other.grid || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "add")?;
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "sub")?;
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|a| *a *= s);
        out
    }

    /// Pointwise matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid || self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(&self.grid, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = vec![0.0; self.nodes()];
                for k in 0..self.cols {
                    let a = self.entry(i, k);
                    let b = other.entry(k, j);
                    for ((o, x), y) in acc.iter_mut().zip(a).zip(b) {
                        *o += x * y;
                    }
                }
                out.entry_mut(i, j).copy_from_slice(&acc);
            }
        }
        Ok(out)
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

    /// Sub-block `rows r0..r1`, `cols c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        let mut out = Self::zeros(&self.grid, r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                out.entry_mut(i - r0, j - c0).copy_from_slice(self.entry(i, j));
            }
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.entry_mut(r0 + i, c0 + j).copy_from_slice(b.entry(i, j));
            }
        }
    }

    /// Horizontal concatenation.
    pub fn hcat(parts: &[&Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("hcat of nothing".into()))?;
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(&first.grid, first.rows, cols);
        let mut c0 = 0;
        for p in parts {
            if p.rows != first.rows || p.grid != first.grid {
                return Err(Error::Shape("hcat: row mismatch".into()));
            }
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        Ok(out)
    }

    pub fn vcat(parts: &[&Self]) -> Result<Self> {
        let t: Vec<Self> = parts.iter().map(|p| p.transpose()).collect();
        let refs: Vec<&Self> = t.iter().collect();
        Ok(Self::hcat(&refs)?.transpose())
    }

    /// Pointwise inverse of a square field; nodes with 1-norm condition above `max_cond` are rejected.
    pub fn inverse(&self, max_cond: f64) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Shape("inverse of a non-square field".into()));
        }
        let n = self.rows;
        let mut out = Self::zeros(&self.grid, n, n);
        for node in 0..self.nodes() {
            let m = DMatrix::from_row_slice(n, n, &self.at_node(node));
            let inv = invert_checked(&m, max_cond).map_err(|cond| Error::Singular { node, cond })?;
            let row_major: Vec<f64> = (0..n * n).map(|e| inv[(e / n, e % n)]).collect();
            out.set_node(node, &row_major);
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid sup of the max-row-sum matrix norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.nodes())
            .map(|node| {
                (0..self.rows)
                    .map(|i| (0..self.cols).map(|j| self.entry(i, j)[node].abs()).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn to_series(&self) -> FourierSeries {
        FourierSeries::from_field(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Inverse with a 1-norm condition guard; on failure returns the condition estimate.
pub fn invert_checked(m: &DMatrix<f64>, max_cond: f64) -> std::result::Result<DMatrix<f64>, f64> {
    let inv = m.clone().lu().try_inverse().ok_or(f64::INFINITY)?;
    let cond = norm1(m) * norm1(&inv);
    if !cond.is_finite() || cond > max_cond {
        return Err(cond);
    }
    Ok(inv)
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1, 1, vec![4, 4]).unwrap()
    }

    #[test]
    fn pointwise_inverse_recovers_identity() {
        let g = grid();
        let f = GridField::from_fn(&g, 2, 2, |x, out| {
            out.copy_from_slice(&[2.0 + x[0], 1.0, x[1], 3.0]);
        });
        let inv = f.inverse(1e12).unwrap();
        let id = f.matmul(&inv).unwrap();
        assert!(id.sub(&GridField::identity(&g, 2)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn singular_node_is_reported() {
        let g = grid();
        let f = GridField::constant(&g, 2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(f.inverse(1e12), Err(Error::Singular { .. })));
    }

    #[test]
    fn blocks_and_concatenation() {
        let g = grid();
        let a = GridField::constant(&g, 2, 1, &[1.0, 2.0]);
        let b = GridField::constant(&g, 2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let h = GridField::hcat(&[&a, &b]).unwrap();
        assert_eq!(h.at_node(3), vec![1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        assert_eq!(h.block(0, 2, 1, 3), b);
        let v = GridField::vcat(&[&a.transpose(), &a.transpose()]).unwrap();
        assert_eq!(v.at_node(0), vec![1.0, 2.0, 1.0, 2.0]);
    }
}
