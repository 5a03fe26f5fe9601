//! Correlation functions `m(f U^n h)` and their noisy versions.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::Serialize;

use super::fit::{decay_fit, DecayFit};
use crate::error::{Error, Result};
use crate::fourier::FourierVector;
use crate::maps::LinearToralMap;
use crate::noise::NoiseKernel;
use crate::propagation::{LatticeOrbitEngine, NormMode, Propagator};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationEntry {
    pub n: u64,
    pub value: Complex64,
    pub noisy: Option<Complex64>,
    /// `||f|| ||h|| ||T_eps^n||`.
    pub norm_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSeries {
    pub eps: f64,
    pub f_norm: f64,
    pub h_norm: f64,
    pub entries: Vec<CorrelationEntry>,
    /// Fit of the noisy series when present, else of the noiseless one.
    pub fit: DecayFit,
    pub cauchy_schwarz_holds: bool,
    pub norm_domination_holds: bool,
}

const SLACK: f64 = 1e-12;

pub fn correlation_series(
    engine: &dyn Propagator,
    f: &FourierVector,
    h: &FourierVector,
    n_max: u64,
    noisy: bool,
) -> Result<CorrelationSeries> {
    let (fnorm, hnorm) = (f.l2_norm(), h.l2_norm());
    let norms = if noisy {
        engine.norm_range(1, n_max, NormMode::Noisy)?
    } else {
        vec![]
    };
    let mut entries = Vec::new();
    for n in 0..=n_max {
        let value = engine.correlation(f, h, n, false)?;
        let (nv, bound) = if noisy {
            let t = if n == 0 { 1.0 } else { norms[n as usize - 1].value() };
            (Some(engine.correlation(f, h, n, true)?), Some(fnorm * hnorm * t))
        } else {
            (None, None)
        };
        entries.push(CorrelationEntry {
            n,
            value,
            noisy: nv,
            norm_bound: bound,
        });
    }
    let scale = fnorm * hnorm;
    let cauchy_schwarz_holds = entries.iter().all(|e| e.value.norm() <= scale * (1.0 + SLACK) + SLACK);
    let norm_domination_holds = entries.iter().all(|e| match (e.noisy, e.norm_bound) {
        (Some(c), Some(b)) => c.norm() <= b * (1.0 + SLACK) + 1e-300,
        _ => true,
    });
    let data: Vec<(u64, f64)> = entries
        .iter()
        .map(|e| (e.n, e.noisy.unwrap_or(e.value).norm()))
        .collect();
    Ok(CorrelationSeries {
        eps: engine.eps(),
        f_norm: fnorm,
        h_norm: hnorm,
        entries,
        fit: decay_fit(&data),
        cauchy_schwarz_holds,
        norm_domination_holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupexpEntry {
    pub n: u64,
    pub correlation: f64,
    pub bound: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupexpReport {
    pub eps: f64,
    pub delta: f64,
    pub h_hat: f64,
    pub entries: Vec<SupexpEntry>,
    pub holds: bool,
    pub skipped: Option<String>,
}

/// Checks `|C^eps(n)| <= ||f|| ||h|| exp(-eps^2 e^{2(1-delta) h_hat n})`
/// for a Gaussian kernel and an ergodic automorphism.
pub fn supexp_bound_check(
    map: &LinearToralMap,
    kernel: &NoiseKernel,
    eps: f64,
    delta: f64,
    f: &FourierVector,
    h: &FourierVector,
    n_range: RangeInclusive<u64>,
) -> Result<SupexpReport> {
    if !kernel.is_alpha_stable() || kernel.alpha() != 2.0 {
        return Err(Error::config("noise.alpha", "the super-exponential bound is stated for Gaussian noise"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("analysis.delta", format!("delta must lie in (0, 1), got {delta}")));
    }
    if !map.is_automorphism() {
        return Err(Error::Invalid("the super-exponential bound needs |det A| = 1".into()));
    }
    let ent = map.entropy_report(None)?;
    if !ent.ergodic {
        return Err(Error::Invalid("the super-exponential bound needs an ergodic map".into()));
    }
    if eps == 0.0 {
        return Ok(SupexpReport {
            eps,
            delta,
            h_hat: ent.h_hat,
            entries: vec![],
            holds: true,
            skipped: Some("eps = 0: the bound degenerates".into()),
        });
    }
    let engine = LatticeOrbitEngine::new(map.clone(), kernel.clone(), eps)?;
    let scale = f.l2_norm() * h.l2_norm();
    let mut entries = Vec::new();
    for n in n_range {
        let c = engine.correlation(f, h, n, true)?.norm();
        let bound = scale * (-(eps * eps) * (2.0 * (1.0 - delta) * ent.h_hat * n as f64).exp()).exp();
        entries.push(SupexpEntry {
            n,
            correlation: c,
            bound,
            margin: bound - c,
            holds: c <= bound * (1.0 + SLACK),
        });
    }
    Ok(SupexpReport {
        eps,
        delta,
        h_hat: ent.h_hat,
        holds: entries.iter().all(|e| e.holds),
        entries,
        skipped: None,
    })
}
