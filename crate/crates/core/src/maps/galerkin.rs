//! Grid-sampled maps and Galerkin matrices of their Koopman operators.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{ExpansionProfile, SmoothTorusMap};
use crate::error::{Error, Result};
use crate::fourier::{DenseOperator, TruncatedGrid};

/// Tolerance on `|det DF| >= 1 - tol` at the samples.
pub const VOLUME_TOL: f64 = 1e-9;

/// A map sampled on the uniform grid `{i / N}^d`, points in lexicographic
/// order (first coordinate most significant).
#[derive(Clone, Debug)]
pub struct SampledMap {
    dim: usize,
    samples: usize,
    images: Vec<Vec<f64>>,
    jacobians: Vec<DMatrix<f64>>,
    source: Arc<dyn SmoothTorusMap>,
}

fn reduce(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl SampledMap {
    pub fn sample(source: Arc<dyn SmoothTorusMap>, samples: usize) -> Result<Self> {
        let dim = source.dim();
        if samples < 2 {
            return Err(Error::config("dense.samples", "need at least two samples per axis"));
        }
        let total = samples
            .checked_pow(dim as u32)
            .filter(|&t| t <= 1 << 26)
            .ok_or_else(|| Error::config("dense.samples", "sample grid too large"))?;
        let mut images = Vec::with_capacity(total);
        let mut jacobians = Vec::with_capacity(total);
        for idx in 0..total {
            let x = point(dim, samples, idx);
            let j = source.jacobian(&x);
            let det = j.determinant().abs();
            if det < 1.0 - VOLUME_TOL {
                return Err(Error::Invalid(format!(
                    "map is not volume preserving: |det DF| = {det} at {x:?}"
                )));
            }
            images.push(source.apply(&x).into_iter().map(reduce).collect());
            jacobians.push(j);
        }
        Ok(SampledMap {
            dim,
            samples,
            images,
            jacobians,
            source,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }

    pub fn jacobians(&self) -> &[DMatrix<f64>] {
        &self.jacobians
    }

    pub fn description(&self) -> String {
        self.source.describe()
    }

    pub fn source(&self) -> &Arc<dyn SmoothTorusMap> {
        &self.source
    }

    /// Grid maxima of `||DF||` and `||DF^{-1}||`; `mu_F` and the hyperbolic
    /// rates from log-linear fits of `max_x ||DF^n(x)||` and
    /// `min_x s_min(DF^n(x))` over `n = 3..=8` along orbits of the samples.
    pub fn expansion_profile(&self) -> ExpansionProfile {
        let mut df_norm = 0.0f64;
        let mut df_inv = 0.0f64;
        for j in &self.jacobians {
            let sv = j.clone().singular_values();
            df_norm = df_norm.max(sv.max());
            df_inv = df_inv.max(1.0 / sv.min());
        }
        let n_max = 8;
        let mut grow = vec![0.0f64; n_max + 1];
        let mut shrink = vec![f64::INFINITY; n_max + 1];
        for idx in 0..self.images.len() {
            let mut x = point(self.dim, self.samples, idx);
            let mut prod = DMatrix::identity(self.dim, self.dim);
            for n in 1..=n_max {
                prod = self.source.jacobian(&x) * prod;
                x = self.source.apply(&x);
                let sv = prod.clone().singular_values();
                grow[n] = grow[n].max(sv.max());
                shrink[n] = shrink[n].min(sv.min());
            }
        }
        let fit = |v: &[f64]| {
            let pts: Vec<(f64, f64)> = (3..=n_max).map(|n| (n as f64, v[n].ln())).collect();
            let m = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            (sxy / sxx).exp()
        };
        let mu = fit(&grow).clamp(1.0, df_norm.max(1.0));
        let contraction = fit(&shrink);
        ExpansionProfile {
            df_norm,
            mu,
            df_inverse_norm: Some(df_inv),
            lambda_u: (mu > 1.0 + 1e-9).then_some(mu),
            lambda_s: (contraction < 1.0 - 1e-9).then_some(contraction),
            grid_spacing: Some(1.0 / self.samples as f64),
        }
    }
}

fn point(dim: usize, samples: usize, mut idx: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for slot in x.iter_mut().rev() {
        *slot = (idx % samples) as f64 / samples as f64;
        idx /= samples;
    }
    x
}

/// Galerkin matrix with its truncation bookkeeping.
#[derive(Clone, Debug)]
pub struct GalerkinKoopman {
    pub operator: DenseOperator,
    /// Squared norm of each column kept inside the grid.
    pub retained: Vec<f64>,
    /// Squared mass of each column that fell outside the grid (including the
    /// constant mode).
    pub leaked: Vec<f64>,
    /// `leaked_shells[j][r]`: leaked mass of column `j` on modes with
    /// `|m|_inf = r`, for `r = 0..=N/2`.
    pub leaked_shells: Vec<Vec<f64>>,
}

fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, fft: &Arc<dyn Fft<f64>>) {
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let total = data.len();
        for base in 0..total {
            // visit each line once, from its first element
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for (t, slot) in line.iter_mut().enumerate() {
                *slot = data[base + t * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (t, v) in line.iter().enumerate() {
                data[base + t * stride] = *v;
            }
        }
    }
}

/// `U_{jk} = N^{-d} sum_x e^{-2 pi i j.x} e^{2 pi i k.F(x)}` by one FFT per column.
pub fn koopman_assembly(map: &SampledMap, grid: &TruncatedGrid) -> Result<GalerkinKoopman> {
    if grid.dim() != map.dim {
        return Err(Error::Dimension(format!(
            "{}-dimensional grid for a {}-dimensional map",
            grid.dim(),
            map.dim
        )));
    }
    let n = map.samples;
    if (n as i64) < 4 * grid.cutoff() {
        return Err(Error::config(
            "dense.samples",
            format!("aliasing guard needs N >= 4K, got N = {n}, K = {}", grid.cutoff()),
        ));
    }
    let d = map.dim;
    let total = map.images.len();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let scale = 1.0 / total as f64;
    let half = n / 2;
    let columns: Vec<(Vec<(usize, Complex64)>, f64, Vec<f64>)> = (0..grid.len())
        .into_par_iter()
        .map(|col| {
            let k = grid.mode(col);
            let mut data: Vec<Complex64> = map
                .images
                .iter()
                .map(|y| {
                    let ph: f64 = k.iter().zip(y).map(|(&c, v)| c as f64 * v).sum();
                    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * ph.rem_euclid(1.0))
                })
                .collect();
            fft_nd(&mut data, d, n, &fft);
            let mut entries = Vec::new();
            let mut retained = 0.0;
            let mut shells = vec![0.0; half + 1];
            for (idx, v) in data.iter().enumerate() {
                let v = v * scale;
                let mut rem = idx;
                let mut freq = vec![0i64; d];
                for slot in freq.iter_mut().rev() {
                    let m = rem % n;
                    rem /= n;
                    *slot = if m <= half { m as i64 } else { m as i64 - n as i64 };
                }
                match grid.index_of(&freq) {
                    Some(row) => {
                        retained += v.norm_sqr();
                        entries.push((row, v));
                    }
                    None => {
                        let r = freq.iter().map(|c| c.unsigned_abs() as usize).max().unwrap();
                        shells[r] += v.norm_sqr();
                    }
                }
            }
            (entries, retained, shells)
        })
        .collect();
    let dimn = grid.len();
    let mut m = DMatrix::zeros(dimn, dimn);
    let mut retained = Vec::with_capacity(dimn);
    let mut leaked = Vec::with_capacity(dimn);
    let mut leaked_shells = Vec::with_capacity(dimn);
    for (col, (entries, kept, shells)) in columns.into_iter().enumerate() {
        for (row, v) in entries {
            m[(row, col)] = v;
        }
        retained.push(kept);
        leaked.push(shells.iter().sum());
        leaked_shells.push(shells);
    }
    Ok(GalerkinKoopman {
        operator: DenseOperator::from_matrix(grid, m)?,
        retained,
        leaked,
        leaked_shells,
    })
}

pub fn koopman_matrix(map: &SampledMap, grid: &TruncatedGrid) -> Result<DenseOperator> {
    Ok(koopman_assembly(map, grid)?.operator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{LinearToralMap, PerturbedCatMap, TranslationMap};

    #[test]
    fn identity_map_gives_identity_matrix() {
        let id = SampledMap::sample(Arc::new(LinearToralMap::identity(2)), 16).unwrap();
        let g = TruncatedGrid::new(2, 4).unwrap();
        let u = koopman_matrix(&id, &g).unwrap();
        let diff = (u.to_matrix() - DMatrix::identity(g.len(), g.len())).camax();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn cat_map_matrix_is_the_mode_permutation() {
        let cat = LinearToralMap::cat();
        let s = SampledMap::sample(Arc::new(cat.clone()), 32).unwrap();
        let g = TruncatedGrid::new(2, 8).unwrap();
        let gk = koopman_assembly(&s, &g).unwrap();
        for (col, k) in g.modes().enumerate() {
            let ak: Vec<i64> = cat.mode_action(&k, 1).unwrap().iter().map(|c| c.try_into().unwrap()).collect();
            let target = g.index_of(&ak);
            for row in 0..g.len() {
                let want = if Some(row) == target { 1.0 } else { 0.0 };
                assert!((gk.operator.entry(row, col) - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
            let expect_leak = if target.is_some() { 0.0 } else { 1.0 };
            assert!((gk.leaked[col] - expect_leak).abs() < 1e-10);
            assert!((gk.retained[col] + gk.leaked[col] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_perturbation_matches_linear_map() {
        let g = TruncatedGrid::new(2, 4).unwrap();
        let a = koopman_matrix(&SampledMap::sample(Arc::new(LinearToralMap::cat()), 16).unwrap(), &g).unwrap();
        let p = PerturbedCatMap::new(LinearToralMap::cat(), 0.0).unwrap();
        let b = koopman_matrix(&SampledMap::sample(Arc::new(p), 16).unwrap(), &g).unwrap();
        assert!((a.to_matrix() - b.to_matrix()).camax() < 1e-12);
    }

    #[test]
    fn perturbed_columns_conserve_mass() {
        let p = PerturbedCatMap::new(LinearToralMap::cat(), 0.01).unwrap();
        let s = SampledMap::sample(Arc::new(p), 32).unwrap();
        let g = TruncatedGrid::new(2, 8).unwrap();
        let gk = koopman_assembly(&s, &g).unwrap();
        for j in 0..g.len() {
            assert!(gk.retained[j] <= 1.0 + 1e-9);
            assert!((gk.retained[j] + gk.leaked[j] - 1.0).abs() < 1e-9);
        }
        let prof = s.expansion_profile();
        assert!(prof.mu <= prof.df_norm);
        assert!(prof.mu > 2.6, "{prof:?}");
    }

    #[test]
    fn aliasing_guard_and_volume_check() {
        let s = SampledMap::sample(Arc::new(TranslationMap::new(vec![0.25]).unwrap()), 8).unwrap();
        assert!(matches!(koopman_matrix(&s, &TruncatedGrid::new(1, 3).unwrap()), Err(Error::Config { .. })));
        assert!(SampledMap::sample(Arc::new(LinearToralMap::doubling()), 8).is_ok());
        #[derive(Debug)]
        struct Squash;
        impl SmoothTorusMap for Squash {
            fn dim(&self) -> usize { 1 }
            fn apply(&self, x: &[f64]) -> Vec<f64> { vec![0.5 * x[0]] }
            fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> { DMatrix::from_element(1, 1, 0.5) }
            fn describe(&self) -> String { "squash".into() }
        }
        assert!(SampledMap::sample(Arc::new(Squash), 8).is_err());
    }

    #[test]
    fn translation_matrix_is_diagonal_phase() {
        let t = TranslationMap::new(vec![0.125]).unwrap();
        let s = SampledMap::sample(Arc::new(t.clone()), 32).unwrap();
        let g = TruncatedGrid::new(1, 8).unwrap();
        let u = koopman_matrix(&s, &g).unwrap();
        for (i, k) in g.modes().enumerate() {
            assert!((u.entry(i, i) - t.phase(&k, 1)).norm() < 1e-12);
        }
    }
}
