//! Fourier modes on the d-torus, zero-mean trigonometric polynomials and
//! truncated operators acting on them.
//!
//! Modes are enumerated lexicographically over the box `[-K, K]^d` with the
//! zero mode removed. The first coordinate is the most significant one, so
//! for `d = 1, K = 2` the order is `-2, -1, 1, 2`.

mod io;
mod linalg;
mod operator;
mod sparse;

pub use io::{read_operator, read_vector, write_operator, write_vector, Format};
pub use operator::DenseOperator;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice point of `Z^d`.
pub type ModeIndex = Vec<i64>;

/// The set `{k in Z^d : 0 < |k|_inf <= K}` with a fixed enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncatedGrid {
    dim: usize,
    cutoff: i64,
}

impl TruncatedGrid {
    pub fn new(dim: usize, cutoff: i64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("grid dimension must be at least 1".into()));
        }
        if cutoff < 1 {
            return Err(Error::Invalid(format!("grid cutoff must be >= 1, got {cutoff}")));
        }
        let side = 2 * cutoff as u128 + 1;
        let total = side.checked_pow(dim as u32).unwrap_or(u128::MAX);
        if total > (usize::MAX / 64) as u128 {
            return Err(Error::Invalid(format!(
                "grid with d={dim}, K={cutoff} is too large to enumerate"
            )));
        }
        Ok(TruncatedGrid { dim, cutoff })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    fn side(&self) -> usize {
        2 * self.cutoff as usize + 1
    }

    fn zero_box_index(&self) -> usize {
        (self.side().pow(self.dim as u32) - 1) / 2
    }

    /// Number of modes.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32) - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim
            && k.iter().any(|&c| c != 0)
            && k.iter().all(|&c| c.abs() <= self.cutoff)
    }

    /// Position of `k` in the enumeration, if it belongs to the grid.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let side = self.side();
        let b = k
            .iter()
            .fold(0usize, |acc, &c| acc * side + (c + self.cutoff) as usize);
        let z = self.zero_box_index();
        Some(if b < z { b } else { b - 1 })
    }

    /// The mode at position `index`.
    pub fn mode(&self, index: usize) -> ModeIndex {
        assert!(index < self.len(), "mode index {index} out of range");
        let z = self.zero_box_index();
        let mut b = if index < z { index } else { index + 1 };
        let side = self.side();
        let mut k = vec![0i64; self.dim];
        for slot in k.iter_mut().rev() {
            *slot = (b % side) as i64 - self.cutoff;
            b /= side;
        }
        k
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.len()).map(move |i| self.mode(i))
    }
}

/// Squared Euclidean length of an integer vector.
pub fn norm_sq(k: &[i64]) -> f64 {
    k.iter().map(|&c| (c as f64) * (c as f64)).sum()
}

/// Lattice points with `inner < |k|_inf <= outer`, in lexicographic order.
pub fn shell(dim: usize, inner: i64, outer: i64) -> impl Iterator<Item = ModeIndex> {
    let side = (2 * outer + 1) as u64;
    let total = side.pow(dim as u32);
    (0..total).filter_map(move |mut b| {
        let mut k = vec![0i64; dim];
        for slot in k.iter_mut().rev() {
            *slot = (b % side) as i64 - outer;
            b /= side;
        }
        let m = k.iter().map(|c| c.abs()).max().unwrap_or(0);
        (m > inner).then_some(k)
    })
}

/// A zero-mean trigonometric polynomial with coefficients on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierVector {
    grid: TruncatedGrid,
    coeffs: Vec<Complex64>,
}

impl FourierVector {
    pub fn zeros(grid: &TruncatedGrid) -> Self {
        FourierVector {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: &TruncatedGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a grid of {} modes",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(FourierVector {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// The single mode `e_k`.
    pub fn unit(grid: &TruncatedGrid, k: &[i64]) -> Result<Self> {
        let mut f = Self::zeros(grid);
        f.set(k, Complex64::new(1.0, 0.0))?;
        Ok(f)
    }

    /// Builds a vector from `(mode, coefficient)` pairs on the smallest grid
    /// holding all of them.
    pub fn from_terms(dim: usize, terms: &[(ModeIndex, Complex64)]) -> Result<Self> {
        let cutoff = terms
            .iter()
            .flat_map(|(k, _)| k.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(1)
            .max(1);
        let grid = TruncatedGrid::new(dim, cutoff)?;
        let mut f = Self::zeros(&grid);
        for (k, c) in terms {
            let idx = grid.index_of(k).ok_or_else(|| {
                Error::Invalid(format!("mode {k:?} is zero or has the wrong dimension"))
            })?;
            f.coeffs[idx] += *c;
        }
        Ok(f)
    }

    pub fn grid(&self) -> &TruncatedGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient `f^(k)`; zero outside the grid.
    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.grid
            .index_of(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::Dimension(format!("mode {k:?} is not in the grid")))?;
        self.coeffs[idx] = value;
        Ok(())
    }

    /// Nonzero coefficients with their modes, in enumeration order.
    pub fn support(&self) -> Vec<(ModeIndex, Complex64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, c)| (self.grid.mode(i), *c))
            .collect()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(sum (1+|k|^2)^s |f^(k)|^2)^(1/2)`.
    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Invalid(format!("Sobolev index must be >= 0, got {s}")));
        }
        let total: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, c)| (1.0 + norm_sq(&self.grid.mode(i))).powf(s) * c.norm_sqr())
            .sum();
        Ok(total.sqrt())
    }

    /// `<self, other> = sum conj(self_k) other_k`.
    pub fn inner(&self, other: &FourierVector) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::Dimension("inner product of vectors on different grids".into()));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Coefficientwise map, keeping the grid.
    pub fn map_modes(&self, mut f: impl FnMut(&[i64], Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if c.norm_sqr() > 0.0 {
                    f(&self.grid.mode(i), c)
                } else {
                    c
                }
            })
            .collect();
        FourierVector {
            grid: self.grid.clone(),
            coeffs,
        }
    }
}
