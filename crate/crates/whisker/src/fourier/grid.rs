use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform grid on the torus `T^{d+ℓ}`: `d` internal angles followed by `ℓ` external phases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    ell: usize,
    sizes: Vec<usize>,
}

impl GridSpec {
    pub fn new(d: usize, ell: usize, sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() != d + ell {
            return Err(Error::Shape(format!(
                "grid has {} axes but d + ell = {}",
                sizes.len(),
                d + ell
            )));
        }
        if sizes.is_empty() {
            return Err(Error::Shape("grid needs at least one axis".into()));
        }
        if let Some(n) = sizes.iter().find(|&&n| n < 2 || n % 2 != 0) {
            return Err(Error::Shape(format!("grid size {n} must be even and >= 2")));
        }
        Ok(Self { d, ell, sizes })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Same axes, every size multiplied by `factor`.
    pub fn scaled(&self, factor: usize) -> Self {
        Self {
            d: self.d,
            ell: self.ell,
            sizes: self.sizes.iter().map(|n| n * factor).collect(),
        }
    }

    /// Per-axis index of a flat (row-major, last axis fastest) position.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for a in (0..self.dims()).rev() {
            idx[a] = flat % self.sizes[a];
            flat /= self.sizes[a];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Signed Fourier mode stored at a flat position (FFT ordering).
    pub fn mode(&self, flat: usize) -> Vec<i64> {
        self.unflatten(flat)
            .iter()
            .zip(&self.sizes)
            .map(|(&i, &n)| signed(i, n))
            .collect()
    }

    /// Flat position of a signed mode, if it fits the grid.
    pub fn position(&self, mode: &[i64]) -> Option<usize> {
        if mode.len() != self.dims() {
            return None;
        }
        let mut flat = 0;
        for (&m, &n) in mode.iter().zip(&self.sizes) {
            let half = (n / 2) as i64;
            if m < -half || m > half {
                return None;
            }
            let i = m.rem_euclid(n as i64) as usize;
            flat = flat * n + i;
        }
        Some(flat)
    }

    /// Flat position of `-m` for the mode stored at `flat`.
    pub fn conjugate_position(&self, flat: usize) -> usize {
        let idx: Vec<usize> = self
            .unflatten(flat)
            .iter()
            .zip(&self.sizes)
            .map(|(&i, &n)| (n - i) % n)
            .collect();
        self.flatten(&idx)
    }

    /// True when some component sits on the Nyquist index `N/2`.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        self.unflatten(flat)
            .iter()
            .zip(&self.sizes)
            .any(|(&i, &n)| i == n / 2)
    }

    /// Angle coordinates (in turns) of the node at a flat position.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .zip(&self.sizes)
            .map(|(&i, &n)| i as f64 / n as f64)
            .collect()
    }

    /// Largest `|m|_1` available in the open band.
    pub fn max_mode_l1(&self) -> usize {
        self.sizes.iter().map(|n| n / 2 - 1).sum()
    }
}

pub(crate) fn signed(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

pub fn l1(mode: &[i64]) -> i64 {
    mode.iter().map(|m| m.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(GridSpec::new(1, 1, vec![8]).is_err());
        assert!(GridSpec::new(1, 1, vec![8, 7]).is_err());
        assert!(GridSpec::new(0, 1, vec![16]).is_ok());
    }

    #[test]
    fn mode_positions_round_trip() {
        let g = GridSpec::new(1, 1, vec![8, 4]).unwrap();
        for flat in 0..g.total() {
            let m = g.mode(flat);
            assert_eq!(g.position(&m), Some(flat));
            let c = g.conjugate_position(flat);
            let mc = g.mode(c);
            for (a, (&x, &y)) in m.iter().zip(&mc).enumerate() {
                let half = (g.sizes()[a] / 2) as i64;
                if x.abs() != half {
                    assert_eq!(x, -y);
                }
            }
        }
        assert_eq!(g.mode(g.flatten(&[5, 3])), vec![-3, -1]);
    }
}
