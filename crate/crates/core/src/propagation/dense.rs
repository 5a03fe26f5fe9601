//! Truncated-grid propagator with leakage bookkeeping.
//!
//! Every application of `U` may push mass outside the grid. For each input
//! mode we store how much (plain, and after the noise factor that would hit
//! it), and reports integrate that along the singular vector being used.

use num_complex::Complex64;

use super::{NormMode, NormValue, Propagator};
use crate::error::{Error, Result};
use crate::fourier::{DenseOperator, FourierVector, TruncatedGrid};
use crate::maps::intmat::big_to_f64;
use crate::maps::{GalerkinKoopman, LinearToralMap, TranslationMap};
use crate::noise::{NoiseKernel, NoiseNorm, SearchPolicy};

type C = Complex64;

/// Leakage above this gets a warning attached to the reported norm.
pub const DEFAULT_LEAK_THRESHOLD: f64 = 1e-6;

const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DenseEngine {
    grid: TruncatedGrid,
    eps: f64,
    noise: NoiseNorm,
    koopman: DenseOperator,
    symbol: Vec<f64>,
    propagator: DenseOperator,
    leak_plain: Vec<f64>,
    leak_noisy: Vec<f64>,
    /// Leaked pieces of distinct columns are orthogonal (true for mode
    /// permutations); otherwise only the triangle inequality is used.
    orthogonal_leak: bool,
    leak_threshold: f64,
    coarse_constant: bool,
    non_weakly_mixing: bool,
}

fn noise_norm_for(kernel: &NoiseKernel, eps: f64) -> Result<NoiseNorm> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::config("epsilon", format!("noise strength must be >= 0, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(NoiseNorm {
            value: 1.0,
            log_value: 0.0,
            argmax: vec![],
        });
    }
    kernel.noise_norm(eps, SearchPolicy::default())
}

impl DenseEngine {
    fn assemble(
        grid: TruncatedGrid,
        kernel: &NoiseKernel,
        eps: f64,
        koopman: DenseOperator,
        leak_plain: Vec<f64>,
        leak_noisy: Vec<f64>,
        orthogonal_leak: bool,
    ) -> Result<Self> {
        if kernel.dim() != grid.dim() {
            return Err(Error::Dimension(format!(
                "{}-dimensional kernel on a {}-dimensional grid",
                kernel.dim(),
                grid.dim()
            )));
        }
        let noise = noise_norm_for(kernel, eps)?;
        let symbol = kernel.diagonal(eps, &grid);
        let propagator = koopman.scale_rows(&symbol)?;
        Ok(DenseEngine {
            grid,
            eps,
            noise,
            koopman,
            symbol,
            propagator,
            leak_plain,
            leak_noisy,
            orthogonal_leak,
            leak_threshold: DEFAULT_LEAK_THRESHOLD,
            coarse_constant: false,
            non_weakly_mixing: false,
        })
    }

    /// Exact truncation of a linear map: `e_k -> e_{Ak}` when `Ak` stays on
    /// the grid, dropped otherwise.
    pub fn from_linear(map: &LinearToralMap, kernel: &NoiseKernel, eps: f64, grid: &TruncatedGrid) -> Result<Self> {
        if map.dim() != grid.dim() {
            return Err(Error::Dimension("map and grid dimensions differ".into()));
        }
        let n = grid.len();
        let mut triplets = Vec::new();
        let mut leak_plain = vec![0.0; n];
        let mut leak_noisy = vec![0.0; n];
        for (col, k) in grid.modes().enumerate() {
            let img = map.matrix().mul_vec_i64(&k);
            let imgf = big_to_f64(&img);
            let inside = imgf.iter().all(|c| c.abs() <= grid.cutoff() as f64);
            if inside {
                let ik: Vec<i64> = imgf.iter().map(|&c| c as i64).collect();
                if let Some(row) = grid.index_of(&ik) {
                    triplets.push((row, col, C::new(1.0, 0.0)));
                    continue;
                }
            }
            leak_plain[col] = 1.0;
            let g = if eps == 0.0 {
                1.0
            } else {
                let xi: Vec<f64> = imgf.iter().map(|c| c * eps).collect();
                kernel.symbol_at(&xi)
            };
            leak_noisy[col] = g * g;
        }
        let koopman = DenseOperator::from_triplets(grid, triplets)?;
        let mut e = Self::assemble(grid.clone(), kernel, eps, koopman, leak_plain, leak_noisy, true)?;
        e.non_weakly_mixing = !map.ergodicity_test();
        Ok(e)
    }

    /// Translations act diagonally, nothing leaks.
    pub fn from_translation(map: &TranslationMap, kernel: &NoiseKernel, eps: f64, grid: &TruncatedGrid) -> Result<Self> {
        if map.dim() != grid.dim() {
            return Err(Error::Dimension("map and grid dimensions differ".into()));
        }
        let phases: Vec<C> = grid.modes().map(|k| map.phase(&k, 1)).collect();
        let koopman = DenseOperator::diagonal(grid, &phases)?;
        let n = grid.len();
        let mut e = Self::assemble(grid.clone(), kernel, eps, koopman, vec![0.0; n], vec![0.0; n], true)?;
        e.coarse_constant = true;
        e.non_weakly_mixing = true;
        Ok(e)
    }

    /// Galerkin matrix of a general map. The noisy leak of a column uses the
    /// kernel envelope on each shell the mass landed on.
    pub fn from_galerkin(assembly: &GalerkinKoopman, kernel: &NoiseKernel, eps: f64) -> Result<Self> {
        let grid = assembly.operator.grid().clone();
        let weights: Vec<f64> = (0..assembly.leaked_shells.first().map_or(0, |s| s.len()))
            .map(|r| {
                if r == 0 || eps == 0.0 {
                    1.0
                } else {
                    let w = kernel.tail_envelope(eps * r as f64).unwrap_or(1.0).min(1.0);
                    w * w
                }
            })
            .collect();
        let leak_noisy = assembly
            .leaked_shells
            .iter()
            .map(|shells| shells.iter().zip(&weights).map(|(m, w)| m * w).sum())
            .collect();
        Self::assemble(
            grid,
            kernel,
            eps,
            assembly.operator.clone(),
            assembly.leaked.clone(),
            leak_noisy,
            false,
        )
    }

    pub fn with_leak_threshold(mut self, threshold: f64) -> Self {
        self.leak_threshold = threshold;
        self
    }

    pub fn with_non_weakly_mixing(mut self, flag: bool) -> Self {
        self.non_weakly_mixing = flag;
        self
    }

    pub fn grid(&self) -> &TruncatedGrid {
        &self.grid
    }

    pub fn koopman(&self) -> &DenseOperator {
        &self.koopman
    }

    pub fn propagator(&self) -> &DenseOperator {
        &self.propagator
    }

    /// `g^(eps k)` per grid mode.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn leak_threshold(&self) -> f64 {
        self.leak_threshold
    }

    fn leak(&self, w: &[C], table: &[f64]) -> f64 {
        if self.orthogonal_leak {
            w.iter().zip(table).map(|(x, l)| x.norm_sqr() * l).sum()
        } else {
            let s: f64 = w.iter().zip(table).map(|(x, l)| x.norm() * l.sqrt()).sum();
            s * s
        }
    }

    /// Mass lost in one application of `T_eps` to `w`.
    pub fn step_leakage(&self, w: &[C]) -> f64 {
        self.leak(w, &self.leak_noisy)
    }

    fn warn(&self, leakage: f64) -> Option<String> {
        (leakage > self.leak_threshold).then(|| {
            format!(
                "truncation leakage {leakage:.3e} exceeds {:.1e}; enlarge the grid",
                self.leak_threshold
            )
        })
    }

    fn noisy_from_power(&self, p: &DenseOperator, n: u64) -> Result<NormValue> {
        let (sigma, v) = p.norm_with_vector(NORM_TOL)?;
        let mut w = v;
        let mut total = 0.0;
        for _ in 0..n {
            total += self.step_leakage(&w);
            w = self.propagator.apply_slice(&w)?;
        }
        Ok(NormValue {
            log_norm: sigma.ln(),
            leakage: total,
            warning: self.warn(total),
        })
    }

    fn coarse_from_power(&self, un: &DenseOperator, n: u64) -> Result<NormValue> {
        let p = un.scale_rows(&self.symbol)?.scale_cols(&self.symbol)?;
        let (sigma, v) = p.norm_with_vector(NORM_TOL)?;
        let mut w: Vec<C> = v.iter().zip(&self.symbol).map(|(x, g)| x * g).collect();
        let mut total = 0.0;
        for _ in 0..n {
            total += self.leak(&w, &self.leak_plain);
            w = self.koopman.apply_slice(&w)?;
        }
        Ok(NormValue {
            log_norm: sigma.ln(),
            leakage: total,
            warning: self.warn(total),
        })
    }

    /// `sigma_min(lambda - T_eps)` on the grid.
    pub fn resolvent_sigma_min(&self, lambda: C) -> Result<f64> {
        self.propagator.smallest_singular(lambda)
    }

    /// Approximate pseudomode at `lambda`: `(sigma_min, vector, leakage)`.
    pub fn pseudomode(&self, lambda: C) -> Result<(f64, Vec<C>, f64)> {
        let (s, v) = self.propagator.smallest_singular_with_vector(lambda)?;
        let leak = self.step_leakage(&v);
        Ok((s, v, leak))
    }

    /// `max_{j,k} |(U^n)_{jk}| / (|j|^{s_star} |k|^s)` for `n = 1..=n_max`,
    /// Euclidean mode norms.
    pub fn koopman_envelope(&self, n_max: u64, s: f64, s_star: f64) -> Result<Vec<f64>> {
        let norms: Vec<f64> = self
            .grid
            .modes()
            .map(|k| k.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt())
            .collect();
        let wr: Vec<f64> = norms.iter().map(|r| r.powf(-s_star)).collect();
        let wc: Vec<f64> = norms.iter().map(|r| r.powf(-s)).collect();
        let mut out = Vec::new();
        let mut p = self.koopman.clone();
        for n in 1..=n_max {
            if n > 1 {
                p = self.koopman.compose(&p)?;
            }
            let m = p.scale_rows(&wr)?.scale_cols(&wc)?.to_matrix();
            out.push(m.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        Ok(out)
    }

    fn embed(&self, h: &FourierVector) -> Result<Vec<C>> {
        let mut v = vec![C::new(0.0, 0.0); self.grid.len()];
        for (k, c) in h.support() {
            let i = self.grid.index_of(&k).ok_or_else(|| {
                Error::Invalid(format!("observable mode {k:?} lies outside the dense grid"))
            })?;
            v[i] = c;
        }
        Ok(v)
    }
}

impl Propagator for DenseEngine {
    fn eps(&self) -> f64 {
        self.eps
    }

    fn engine_tag(&self) -> &'static str {
        "dense"
    }

    fn noise_norm(&self) -> &NoiseNorm {
        &self.noise
    }

    fn noisy_norm(&self, n: u64) -> Result<NormValue> {
        if n == 0 {
            return Ok(NormValue::exact(0.0));
        }
        self.noisy_from_power(&self.propagator.power(n), n)
    }

    fn coarse_norm(&self, n: u64) -> Result<NormValue> {
        self.coarse_from_power(&self.koopman.power(n), n)
    }

    fn norm_range(&self, start: u64, end: u64, mode: NormMode) -> Result<Vec<NormValue>> {
        let start = start.max(1);
        let base = match mode {
            NormMode::Noisy => &self.propagator,
            NormMode::Coarse => &self.koopman,
        };
        let mut out = Vec::new();
        let mut p = base.power(start);
        for n in start..=end {
            if n > start {
                p = base.compose(&p)?;
            }
            out.push(match mode {
                NormMode::Noisy => self.noisy_from_power(&p, n)?,
                NormMode::Coarse => self.coarse_from_power(&p, n)?,
            });
        }
        Ok(out)
    }

    fn coarse_norm_is_constant(&self) -> bool {
        self.coarse_constant
    }

    fn non_weakly_mixing(&self) -> bool {
        self.non_weakly_mixing
    }

    fn correlation(&self, f: &FourierVector, h: &FourierVector, n: u64, noisy: bool) -> Result<C> {
        let op = if noisy { &self.propagator } else { &self.koopman };
        let mut w = self.embed(h)?;
        for _ in 0..n {
            w = op.apply_slice(&w)?;
        }
        let mut total = C::new(0.0, 0.0);
        for (i, k) in self.grid.modes().enumerate() {
            if w[i] == C::new(0.0, 0.0) {
                continue;
            }
            let neg: Vec<i64> = k.iter().map(|c| -c).collect();
            total += w[i] * f.get(&neg);
        }
        Ok(total)
    }
}
