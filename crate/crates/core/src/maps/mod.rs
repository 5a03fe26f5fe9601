//! Volume-preserving maps of the torus and their static invariants.
//!
//! A linear map is given by an integer matrix `A` and acts as
//! `F(x) = A^t x mod 1`; on Fourier modes this is `U e_k = e_{A k}`.

mod galerkin;
pub mod intmat;
pub mod poly;

use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

pub use galerkin::{koopman_assembly, koopman_matrix, GalerkinKoopman, SampledMap};
pub use intmat::IntMatrix;
pub use poly::IntPoly;

use crate::error::{Error, Result};

/// A smooth map of the torus, evaluated pointwise.
pub trait SmoothTorusMap: Send + Sync + Debug {
    fn dim(&self) -> usize;
    /// Image of `x`, not reduced modulo 1.
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
    fn describe(&self) -> String;
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearToralMap {
    rows: Vec<Vec<i64>>,
    matrix: IntMatrix,
    det: BigInt,
    charpoly: IntPoly,
    /// `A^{-1}` for automorphisms.
    inverse: Option<IntMatrix>,
}

impl LinearToralMap {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let matrix = IntMatrix::from_rows(&rows)
            .ok_or_else(|| Error::config("map.matrix", "matrix must be square and nonempty"))?;
        let (charpoly, m) = poly::charpoly(&matrix);
        let c0 = charpoly.coeff(0);
        let d = matrix.dim();
        let det = if d % 2 == 0 { c0.clone() } else { -c0.clone() };
        if det == BigInt::from(0) {
            return Err(Error::config("map.matrix", "matrix is singular"));
        }
        let inverse = c0.abs().is_one().then(|| m.scale(&-c0.clone()));
        Ok(LinearToralMap {
            rows,
            matrix,
            det,
            charpoly,
            inverse,
        })
    }

    /// The doubling map `x -> 2x` on the circle.
    pub fn doubling() -> Self {
        Self::new(vec![vec![2]]).unwrap()
    }

    /// Arnold's cat map `A = [[2, 1], [1, 1]]`.
    pub fn cat() -> Self {
        Self::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    pub fn identity(dim: usize) -> Self {
        Self::new((0..dim).map(|i| (0..dim).map(|j| (i == j) as i64).collect()).collect()).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    pub fn characteristic_polynomial(&self) -> &IntPoly {
        &self.charpoly
    }

    pub fn is_automorphism(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn inverse_matrix(&self) -> Option<&IntMatrix> {
        self.inverse.as_ref()
    }

    /// The inverse automorphism.
    pub fn inverse(&self) -> Result<LinearToralMap> {
        let inv = self
            .inverse
            .as_ref()
            .ok_or_else(|| Error::Invalid("only automorphisms are invertible".into()))?;
        Self::new(inv.to_i64().expect("inverse of a unimodular matrix fits"))
    }

    /// `A^n` for `n >= 0`, `A^{-|n|}` for automorphisms.
    pub fn matrix_power(&self, n: i64) -> Result<IntMatrix> {
        if n >= 0 {
            return Ok(self.matrix.pow(n as u64));
        }
        let inv = self
            .inverse
            .as_ref()
            .ok_or_else(|| Error::Invalid("negative power of a non-invertible map".into()))?;
        Ok(inv.pow(n.unsigned_abs()))
    }

    /// `A^n k`, exact.
    pub fn mode_action(&self, k: &[i64], n: u64) -> Result<Vec<BigInt>> {
        if k.len() != self.dim() {
            return Err(Error::Dimension(format!("mode of length {} for a {}-dimensional map", k.len(), self.dim())));
        }
        if k.iter().all(|&c| c == 0) {
            return Err(Error::Invalid("the zero mode has no dynamics".into()));
        }
        Ok(self.matrix.pow(n).mul_vec_i64(k))
    }

    pub fn ergodicity_test(&self) -> bool {
        poly::cyclotomic_orders(self.dim())
            .into_iter()
            .all(|m| !poly::cyclotomic(m).divides(&self.charpoly))
    }

    fn eigenvalues(&self) -> Vec<num_complex::Complex64> {
        self.matrix.to_f64().complex_eigenvalues().iter().copied().collect()
    }

    pub fn expansion_profile(&self) -> ExpansionProfile {
        let a = self.matrix.to_f64();
        let sv = a.clone().singular_values();
        let moduli: Vec<f64> = self.eigenvalues().iter().map(|z| z.norm()).collect();
        let rho = moduli.iter().cloned().fold(0.0, f64::max);
        let low = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
        ExpansionProfile {
            df_norm: sv.max(),
            mu: rho,
            df_inverse_norm: self.is_automorphism().then(|| 1.0 / sv.min()),
            lambda_u: (rho > 1.0 + 1e-12).then_some(rho),
            lambda_s: (low < 1.0 - 1e-12).then_some(low),
            grid_spacing: None,
        }
    }

    /// Kolmogorov-Sinai entropy, irreducible factors and the dimensionally
    /// averaged entropy. Characteristic polynomials of degree above 6 need a
    /// factorization hint (monic integer factors, ascending coefficients),
    /// which is verified by exact multiplication.
    pub fn entropy_report(&self, hint: Option<&[Vec<i64>]>) -> Result<EntropyReport> {
        let factors = match hint {
            Some(h) => {
                let polys: Vec<IntPoly> = h.iter().map(|c| IntPoly::from_i64(c)).collect();
                if polys.iter().any(|p| p.is_zero() || !p.0.last().unwrap().is_one()) {
                    return Err(Error::Invalid("factorization hint must consist of monic polynomials".into()));
                }
                let product = polys.iter().fold(IntPoly::from_i64(&[1]), |acc, p| acc.mul(p));
                if product != self.charpoly {
                    return Err(Error::Invalid("factorization hint does not multiply to the characteristic polynomial".into()));
                }
                let mut grouped: Vec<(IntPoly, usize)> = Vec::new();
                for p in polys {
                    match grouped.iter_mut().find(|(g, _)| *g == p) {
                        Some(e) => e.1 += 1,
                        None => grouped.push((p, 1)),
                    }
                }
                grouped
            }
            None => poly::factor_small(&self.charpoly).ok_or_else(|| {
                Error::Unsupported(format!(
                    "exact factorization of a degree-{} characteristic polynomial needs a hint",
                    self.charpoly.degree()
                ))
            })?,
        };
        let h: f64 = self
            .eigenvalues()
            .iter()
            .map(|z| z.norm())
            .filter(|&r| r > 1.0)
            .map(f64::ln)
            .sum();
        let mut entries = Vec::new();
        for (p, mult) in &factors {
            let roots = poly_roots(p);
            let hj: f64 = roots.iter().map(|z| z.norm()).filter(|&r| r > 1.0).map(f64::ln).sum();
            entries.push(FactorEntropy {
                coefficients: p.0.iter().map(|c| c.to_i64().unwrap_or(i64::MAX)).collect(),
                degree: p.degree(),
                multiplicity: *mult,
                entropy: hj,
                averaged: hj / p.degree() as f64,
            });
        }
        let h_hat = entries.iter().map(|e| e.averaged).fold(f64::INFINITY, f64::min);
        Ok(EntropyReport {
            h,
            factors: entries,
            h_hat,
            ergodic: self.ergodicity_test(),
        })
    }
}

/// Roots of an integer polynomial from its companion matrix.
fn poly_roots(p: &IntPoly) -> Vec<num_complex::Complex64> {
    let d = p.degree();
    if d == 0 {
        return vec![];
    }
    let c: Vec<f64> = p.0.iter().map(|v| v.to_f64().unwrap()).collect();
    let comp = DMatrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -c[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    comp.complex_eigenvalues().iter().copied().collect()
}

impl SmoothTorusMap for LinearToralMap {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.rows[j][i] as f64 * x[j]).sum())
            .collect()
    }

    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        self.matrix.to_f64().transpose()
    }

    fn describe(&self) -> String {
        format!("linear A = {:?}", self.rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslationMap {
    theta: Vec<f64>,
}

impl TranslationMap {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("map.theta", "rotation vector must be nonempty and finite"));
        }
        Ok(TranslationMap {
            theta: theta.iter().map(|t| t.rem_euclid(1.0)).collect(),
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `U^n e_k = exp(2 pi i n k.theta) e_k`.
    pub fn phase(&self, k: &[i64], n: u64) -> num_complex::Complex64 {
        let t: f64 = k.iter().zip(&self.theta).map(|(&c, t)| c as f64 * t).sum();
        let frac = (t * n as f64).rem_euclid(1.0);
        num_complex::Complex64::from_polar(1.0, 2.0 * PI * frac)
    }

    pub fn expansion_profile(&self) -> ExpansionProfile {
        ExpansionProfile {
            df_norm: 1.0,
            mu: 1.0,
            df_inverse_norm: Some(1.0),
            lambda_u: None,
            lambda_s: None,
            grid_spacing: None,
        }
    }
}

impl SmoothTorusMap for TranslationMap {
    fn dim(&self) -> usize {
        self.theta.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.theta).map(|(a, b)| a + b).collect()
    }

    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.theta.len(), self.theta.len())
    }

    fn describe(&self) -> String {
        format!("translation theta = {:?}", self.theta)
    }
}

/// `F = A^t o S2 o S1` with the shears `S1(x) = (x1 + delta sin 2 pi x2, x2)`
/// and `S2(x) = (x1, x2 + delta sin 2 pi x1)`. Every factor has unit
/// Jacobian determinant, so `F` preserves Lebesgue measure exactly; for
/// `delta = 0` it is the linear map.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedCatMap {
    linear: LinearToralMap,
    delta: f64,
}

impl PerturbedCatMap {
    pub fn new(linear: LinearToralMap, delta: f64) -> Result<Self> {
        if linear.dim() != 2 || !linear.is_automorphism() {
            return Err(Error::config("map.matrix", "perturbed maps need a 2x2 unimodular matrix"));
        }
        if !delta.is_finite() {
            return Err(Error::config("map.delta", "delta must be finite"));
        }
        Ok(PerturbedCatMap { linear, delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn linear(&self) -> &LinearToralMap {
        &self.linear
    }

    fn shears(&self, x: &[f64]) -> ([f64; 2], [f64; 2]) {
        let y = [x[0] + self.delta * (2.0 * PI * x[1]).sin(), x[1]];
        let z = [y[0], y[1] + self.delta * (2.0 * PI * y[0]).sin()];
        (y, z)
    }
}

impl SmoothTorusMap for PerturbedCatMap {
    fn dim(&self) -> usize {
        2
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (_, z) = self.shears(x);
        self.linear.apply(&z)
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let (y, _) = self.shears(x);
        let tpd = 2.0 * PI * self.delta;
        let ds1 = DMatrix::from_row_slice(2, 2, &[1.0, tpd * (2.0 * PI * x[1]).cos(), 0.0, 1.0]);
        let ds2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, tpd * (2.0 * PI * y[0]).cos(), 1.0]);
        self.linear.jacobian(x) * ds2 * ds1
    }

    fn describe(&self) -> String {
        format!("perturbed A = {:?}, delta = {}", self.linear.rows, self.delta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionProfile {
    /// `||DF||_inf`; a lower estimate for sampled maps.
    pub df_norm: f64,
    /// Maximal expansion rate `mu_F`.
    pub mu: f64,
    pub df_inverse_norm: Option<f64>,
    pub lambda_u: Option<f64>,
    pub lambda_s: Option<f64>,
    /// Sample spacing behind the grid maxima, for sampled maps.
    pub grid_spacing: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorEntropy {
    /// Ascending integer coefficients of the monic irreducible factor.
    pub coefficients: Vec<i64>,
    pub degree: usize,
    pub multiplicity: usize,
    pub entropy: f64,
    pub averaged: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub h: f64,
    pub factors: Vec<FactorEntropy>,
    pub h_hat: f64,
    pub ergodic: bool,
}
