//! Exact integer matrices with big-integer entries.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    dim: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Option<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(IntMatrix {
            dim,
            data: rows.iter().flatten().map(|&v| BigInt::from(v)).collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = IntMatrix {
            dim,
            data: vec![BigInt::zero(); dim * dim],
        };
        for i in 0..dim {
            m.data[i * dim + i] = BigInt::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.dim + j]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.dim;
        let mut data = vec![BigInt::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = &self.data[i * d + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * &other.data[k * d + j];
                }
            }
        }
        IntMatrix { dim: d, data }
    }

    pub fn add_scaled_identity(&self, c: &BigInt) -> IntMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    pub fn scale(&self, c: &BigInt) -> IntMatrix {
        IntMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn trace(&self) -> BigInt {
        (0..self.dim).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn transpose(&self) -> IntMatrix {
        let d = self.dim;
        IntMatrix {
            dim: d,
            data: (0..d * d).map(|p| self.data[(p % d) * d + p / d].clone()).collect(),
        }
    }

    pub fn pow(&self, mut n: u64) -> IntMatrix {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| &self.data[i * d + j] * &v[j]).sum())
            .collect()
    }

    pub fn mul_vec_i64(&self, v: &[i64]) -> Vec<BigInt> {
        let big: Vec<BigInt> = v.iter().map(|&c| BigInt::from(c)).collect();
        self.mul_vec(&big)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            self.get(i, j).to_f64().unwrap_or(f64::INFINITY)
        })
    }

    /// Entries as `i64` when they all fit.
    pub fn to_i64(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).to_i64()).collect())
            .collect()
    }

    pub fn max_abs_entry(&self) -> BigInt {
        self.data.iter().map(|v| v.abs()).max().unwrap_or_default()
    }
}

/// Squared Euclidean length of a big-integer vector as `f64`.
pub fn big_norm_sq(v: &[BigInt]) -> f64 {
    v.iter()
        .map(|c| {
            let x = c.to_f64().unwrap_or(f64::INFINITY);
            x * x
        })
        .sum()
}

pub fn big_to_f64(v: &[BigInt]) -> Vec<f64> {
    v.iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY)).collect()
}

pub fn big_to_i64(v: &[BigInt]) -> Option<Vec<i64>> {
    v.iter().map(|c| c.to_i64()).collect()
}
