//! Exact norms for linear maps and translations.
//!
//! `U` permutes modes, so `T_eps^n` is a weighted permutation and its norm
//! is the largest weight: `exp(-min_k sum_l phi(eps A^l k))` with
//! `phi = -ln |g^|`. The minimum is found by a shell search whose
//! stopping radius comes from a quadratic lower bound on the orbit sum.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{NormMode, NormValue, Propagator};
use crate::error::{Error, Result};
use crate::fourier::{shell, FourierVector};
use crate::maps::intmat::{big_norm_sq, big_to_f64, big_to_i64};
use crate::maps::{IntMatrix, LinearToralMap, TranslationMap};
use crate::noise::{NoiseKernel, NoiseNorm, SearchPolicy};

#[derive(Clone, Debug)]
pub enum LatticeMap {
    Linear(LinearToralMap),
    Translation(TranslationMap),
}

impl LatticeMap {
    pub fn dim(&self) -> usize {
        match self {
            LatticeMap::Linear(m) => m.dim(),
            LatticeMap::Translation(t) => t.dim(),
        }
    }
}

impl From<LinearToralMap> for LatticeMap {
    fn from(m: LinearToralMap) -> Self {
        LatticeMap::Linear(m)
    }
}

impl From<TranslationMap> for LatticeMap {
    fn from(t: TranslationMap) -> Self {
        LatticeMap::Translation(t)
    }
}

/// Result of minimizing `sum_i phi(eps A^{p_i} k)` over `k != 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitMinimum {
    /// The minimal orbit functional (the negative log of the norm).
    pub value: f64,
    /// Minimizer in the centred variable `j = A^shift k`.
    pub centred: Vec<i64>,
    pub shift: i64,
    /// Last shell radius searched.
    pub radius: i64,
}

#[derive(Clone, Debug)]
pub struct LatticeOrbitEngine {
    map: LatticeMap,
    kernel: NoiseKernel,
    eps: f64,
    policy: SearchPolicy,
    noise: NoiseNorm,
    coarse_constant: bool,
    non_weakly_mixing: bool,
}

fn sym_min_eig(m: &DMatrix<f64>) -> (f64, f64) {
    let e = m.clone().symmetric_eigen().eigenvalues;
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(0.0f64, |a, b| a.max(b.abs()));
    (lo, hi)
}

impl LatticeOrbitEngine {
    pub fn new(map: impl Into<LatticeMap>, kernel: NoiseKernel, eps: f64) -> Result<Self> {
        Self::with_policy(map, kernel, eps, SearchPolicy::default())
    }

    pub fn with_policy(
        map: impl Into<LatticeMap>,
        kernel: NoiseKernel,
        eps: f64,
        policy: SearchPolicy,
    ) -> Result<Self> {
        let map = map.into();
        if map.dim() != kernel.dim() {
            return Err(Error::Dimension(format!(
                "{}-dimensional map with a {}-dimensional kernel",
                map.dim(),
                kernel.dim()
            )));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::config("epsilon", format!("noise strength must be >= 0, got {eps}")));
        }
        let noise = if eps == 0.0 {
            NoiseNorm {
                value: 1.0,
                log_value: 0.0,
                argmax: vec![],
            }
        } else {
            kernel.noise_norm(eps, policy)?
        };
        let (coarse_constant, non_weakly_mixing) = match &map {
            LatticeMap::Translation(_) => (true, true),
            LatticeMap::Linear(m) => {
                // A^t Q A = Q makes every |A^n k|_Q equal to |k|_Q
                let a = m.matrix().to_f64();
                let q = kernel.q();
                let d = &(a.transpose() * q * &a) - q;
                let isometry = d.amax() <= 1e-12 * q.amax();
                (isometry, !m.ergodicity_test())
            }
        };
        Ok(LatticeOrbitEngine {
            map,
            kernel,
            eps,
            policy,
            noise,
            coarse_constant,
            non_weakly_mixing,
        })
    }

    pub fn map(&self) -> &LatticeMap {
        &self.map
    }

    pub fn kernel(&self) -> &NoiseKernel {
        &self.kernel
    }

    /// Orbit term before scaling: `Q(x)^{alpha/2}` for alpha-stable kernels
    /// (the factor `eps^alpha` is applied once to the sum), `-ln |g^(eps x)|`
    /// otherwise.
    fn raw_term(&self, x: &[BigInt]) -> f64 {
        let xf = big_to_f64(x);
        if self.kernel.is_alpha_stable() {
            return self.kernel.quadratic_form(&xf).powf(self.kernel.alpha() / 2.0);
        }
        let xi: Vec<f64> = xf.iter().map(|c| c * self.eps).collect();
        self.kernel.neg_log_symbol(&xi)
    }

    fn term_scale(&self) -> f64 {
        if self.kernel.is_alpha_stable() {
            self.eps.powf(self.kernel.alpha())
        } else {
            1.0
        }
    }

    /// Exact minimum of `sum_i phi(eps A^{p_i} k)` over nonzero `k`.
    pub fn orbit_minimum(&self, exponents: &[i64]) -> Result<OrbitMinimum> {
        let LatticeMap::Linear(map) = &self.map else {
            return Err(Error::Invalid("orbit minimum needs a linear map".into()));
        };
        if exponents.is_empty() {
            return Err(Error::Invalid("empty orbit".into()));
        }
        let d = map.dim();
        let lo = *exponents.iter().min().unwrap();
        let hi = *exponents.iter().max().unwrap();
        let candidates: Vec<i64> = if map.is_automorphism() {
            (lo..=hi).collect()
        } else {
            if lo < 0 {
                return Err(Error::Invalid("negative power of a non-invertible map".into()));
            }
            vec![0]
        };
        // f64 copies of A^q for q in [-span, span]
        let mut float_pow = std::collections::HashMap::new();
        let q_form = if self.kernel.is_alpha_stable() {
            self.kernel.q().clone()
        } else {
            DMatrix::identity(d, d)
        };
        let q_min = if self.kernel.is_alpha_stable() {
            self.kernel.q_min_eigenvalue()
        } else {
            1.0
        };
        let mut best_shift = (f64::NEG_INFINITY, 0i64);
        for &m in &candidates {
            let mut sum = DMatrix::<f64>::zeros(d, d);
            let mut has_identity = false;
            for &p in exponents {
                let q = p - m;
                if q == 0 {
                    has_identity = true;
                }
                let b = float_pow
                    .entry(q)
                    .or_insert_with(|| map.matrix_power(q).expect("checked invertibility").to_f64())
                    .clone();
                let part = b.transpose() * &q_form * &b;
                sum += &part;
            }
            let (lam_lo, lam_hi) = sym_min_eig(&sum);
            let mut lam = lam_lo - 1e-10 * lam_hi;
            if has_identity {
                lam = lam.max(q_min * (1.0 - 1e-12));
            }
            if lam > best_shift.0 {
                best_shift = (lam, m);
            }
        }
        let (lam, shift) = best_shift;
        if !(lam > 0.0) {
            return Err(Error::numerical(
                "orbit functional has no positive quadratic lower bound",
                lam,
            ));
        }
        let mats: Vec<IntMatrix> = exponents
            .iter()
            .map(|&p| map.matrix_power(p - shift))
            .collect::<Result<_>>()?;
        let r_count = mats.len() as f64;
        let alpha = self.kernel.alpha();
        let eval = |j: &[i64]| -> f64 {
            let mut s = 0.0;
            for b in &mats {
                s += self.raw_term(&b.mul_vec_i64(j));
            }
            s
        };
        let mut best = (f64::INFINITY, Vec::new());
        let (mut inner, mut outer) = (0i64, 1i64);
        loop {
            let pts: Vec<Vec<i64>> = shell(d, inner, outer).collect();
            let local = pts
                .par_iter()
                .map(|j| (eval(j), j.clone()))
                .reduce(|| (f64::INFINITY, Vec::new()), |a, b| {
                    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1 && !b.1.is_empty()) {
                        b
                    } else {
                        a
                    }
                });
            if local.0 < best.0 {
                best = local;
            }
            let r = outer as f64;
            let bound = if self.kernel.is_alpha_stable() {
                // S(j) >= (j^T M j)^{alpha/2} >= (lam R^2)^{alpha/2} off the box
                (lam * r * r).powf(alpha / 2.0)
            } else {
                // some |B_i j| is at least sqrt(lam / count) |j|
                let env = self
                    .kernel
                    .tail_envelope(self.eps * r * (lam / r_count).sqrt())
                    .ok_or_else(|| {
                        Error::config("noise.envelope", "a custom symbol needs a decay envelope")
                    })?;
                if env > 0.0 {
                    -env.ln()
                } else {
                    f64::INFINITY
                }
            };
            if bound >= best.0 {
                break;
            }
            if outer >= self.policy.max_radius {
                return Err(Error::Certification(format!(
                    "orbit search not certified by radius {}; best value {}",
                    self.policy.max_radius, best.0
                )));
            }
            inner = outer;
            outer *= 2;
        }
        Ok(OrbitMinimum {
            value: self.term_scale() * best.0,
            centred: best.1,
            shift,
            radius: outer,
        })
    }

    fn linear_log_norm(&self, n: u64, mode: NormMode) -> Result<f64> {
        if self.eps == 0.0 {
            return Ok(0.0);
        }
        let n = i64::try_from(n).map_err(|_| Error::Invalid("n too large".into()))?;
        let exps: Vec<i64> = match mode {
            NormMode::Noisy => (1..=n).collect(),
            NormMode::Coarse => vec![0, n],
        };
        Ok(-self.orbit_minimum(&exps)?.value)
    }
}

impl Propagator for LatticeOrbitEngine {
    fn eps(&self) -> f64 {
        self.eps
    }

    fn engine_tag(&self) -> &'static str {
        "lattice"
    }

    fn noise_norm(&self) -> &NoiseNorm {
        &self.noise
    }

    fn noisy_norm(&self, n: u64) -> Result<NormValue> {
        if n == 0 {
            return Ok(NormValue::exact(0.0));
        }
        match &self.map {
            LatticeMap::Translation(_) => Ok(NormValue::exact(n as f64 * self.noise.log_value)),
            LatticeMap::Linear(_) => Ok(NormValue::exact(self.linear_log_norm(n, NormMode::Noisy)?)),
        }
    }

    fn coarse_norm(&self, n: u64) -> Result<NormValue> {
        match &self.map {
            LatticeMap::Translation(_) => Ok(NormValue::exact(2.0 * self.noise.log_value)),
            LatticeMap::Linear(_) => {
                if n == 0 {
                    return Ok(NormValue::exact(2.0 * self.noise.log_value));
                }
                if self.coarse_constant {
                    return Ok(NormValue::exact(2.0 * self.noise.log_value));
                }
                Ok(NormValue::exact(self.linear_log_norm(n, NormMode::Coarse)?))
            }
        }
    }

    fn norm_range(&self, start: u64, end: u64, mode: NormMode) -> Result<Vec<NormValue>> {
        (start.max(1)..=end)
            .into_par_iter()
            .map(|n| self.norm(n, mode))
            .collect()
    }

    fn coarse_norm_is_constant(&self) -> bool {
        self.coarse_constant
    }

    fn non_weakly_mixing(&self) -> bool {
        self.non_weakly_mixing
    }

    fn correlation(&self, f: &FourierVector, h: &FourierVector, n: u64, noisy: bool) -> Result<Complex64> {
        let d = self.map.dim();
        if f.grid().dim() != d || h.grid().dim() != d {
            return Err(Error::Dimension("observable dimension does not match the map".into()));
        }
        let noisy = noisy && self.eps > 0.0;
        let mut total = Complex64::new(0.0, 0.0);
        for (k, hk) in h.support() {
            match &self.map {
                LatticeMap::Translation(t) => {
                    let neg: Vec<i64> = k.iter().map(|c| -c).collect();
                    let fk = f.get(&neg);
                    if fk == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut w = t.phase(&k, n);
                    if noisy {
                        let g = self.kernel.eigenvalue_on_mode(self.eps, &k);
                        w *= g.powf(n as f64);
                    }
                    total += hk * w * fk;
                }
                LatticeMap::Linear(m) => {
                    let a = m.matrix();
                    let mut x: Vec<BigInt> = k.iter().map(|&c| BigInt::from(c)).collect();
                    let mut raw = 0.0;
                    for _ in 0..n {
                        x = a.mul_vec(&x);
                        if noisy {
                            raw += self.raw_term(&x);
                        }
                    }
                    let log_w = -self.term_scale() * raw;
                    // f^ is finitely supported, so huge images contribute nothing
                    let Some(img) = big_to_i64(&x) else { continue };
                    if big_norm_sq(&x) == 0.0 {
                        continue;
                    }
                    let neg: Vec<i64> = img.iter().map(|c| -c).collect();
                    let fk = f.get(&neg);
                    if fk != Complex64::new(0.0, 0.0) {
                        total += hk * fk * log_w.exp();
                    }
                }
            }
        }
        Ok(total)
    }
}

