//! First crossing of a norm curve below a threshold.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagation::{NormCurve, NormMode, Propagator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DissipationTime {
    Finite(u64),
    Infinite,
    /// No crossing up to the cap and no certificate.
    ExceedsCap(u64),
}

impl DissipationTime {
    pub fn finite(self) -> Option<u64> {
        match self {
            DissipationTime::Finite(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for DissipationTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DissipationTime::Finite(n) => write!(f, "{n}"),
            DissipationTime::Infinite => write!(f, "INFINITE"),
            DissipationTime::ExceedsCap(c) => write!(f, "EXCEEDS_CAP({c})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DissipationOptions {
    pub eta: f64,
    /// `ln eta`; kept exact for the default so that `ln(e^-1)` is `-1`.
    pub log_eta: f64,
    pub n_cap: u64,
    pub plateau_window: usize,
    pub plateau_tol: f64,
    /// Longest norm curve attached to a report.
    pub curve_limit: u64,
}

impl Default for DissipationOptions {
    fn default() -> Self {
        DissipationOptions {
            eta: (-1f64).exp(),
            log_eta: -1.0,
            n_cap: 100_000,
            plateau_window: 50,
            plateau_tol: 1e-12,
            curve_limit: 64,
        }
    }
}

impl DissipationOptions {
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self.log_eta = if eta == (-1f64).exp() { -1.0 } else { eta.ln() };
        self
    }

    pub fn with_cap(mut self, n_cap: u64) -> Self {
        self.n_cap = n_cap;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::config("run.eta", format!("threshold must lie in (0, 1), got {}", self.eta)));
        }
        if self.n_cap == 0 {
            return Err(Error::config("run.n_cap", "cap must be at least 1"));
        }
        Ok(())
    }
}

/// Norms within a few ulps of the threshold count as on it, not below it:
/// `eps^-alpha` is often an integer in exact arithmetic and only rounding
/// would push `n eps^alpha` past 1 there.
const THRESHOLD_GUARD: f64 = 4.0 * f64::EPSILON;

fn below(log_norm: f64, log_eta: f64) -> bool {
    log_norm < log_eta - THRESHOLD_GUARD * log_eta.abs()
}

/// `tau* = min{n : ||T^n|| < eta}` or its coarse analogue.
pub fn dissipation_time(engine: &dyn Propagator, mode: NormMode, opts: &DissipationOptions) -> Result<DissipationTime> {
    opts.validate()?;
    match mode {
        NormMode::Noisy => noisy_time(engine, opts),
        NormMode::Coarse => coarse_time(engine, opts),
    }
}

fn noisy_time(engine: &dyn Propagator, opts: &DissipationOptions) -> Result<DissipationTime> {
    let crosses = |n: u64| -> Result<bool> { Ok(below(engine.noisy_norm(n)?.log_norm, opts.log_eta)) };
    // the curve is strictly decreasing, so the crossing set is an up-ray
    let mut lo = 0u64;
    let mut hi = 1u64;
    loop {
        if hi >= opts.n_cap {
            hi = opts.n_cap;
            if !crosses(hi)? {
                return Ok(DissipationTime::ExceedsCap(opts.n_cap));
            }
            break;
        }
        if crosses(hi)? {
            break;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if crosses(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(DissipationTime::Finite(hi))
}

fn coarse_time(engine: &dyn Propagator, opts: &DissipationOptions) -> Result<DissipationTime> {
    if engine.coarse_norm_is_constant() {
        return Ok(if below(engine.coarse_norm(1)?.log_norm, opts.log_eta) {
            DissipationTime::Finite(1)
        } else {
            DissipationTime::Infinite
        });
    }
    let watch_plateau = engine.non_weakly_mixing();
    let mut window: std::collections::VecDeque<f64> = std::collections::VecDeque::new();
    let mut start = 1u64;
    let mut chunk = 16u64;
    while start <= opts.n_cap {
        let end = (start + chunk - 1).min(opts.n_cap);
        let values = engine.norm_range(start, end, NormMode::Coarse)?;
        for (i, v) in values.iter().enumerate() {
            let n = start + i as u64;
            if below(v.log_norm, opts.log_eta) {
                return Ok(DissipationTime::Finite(n));
            }
            if watch_plateau {
                window.push_back(v.value());
                if window.len() > opts.plateau_window {
                    window.pop_front();
                }
                if window.len() == opts.plateau_window {
                    let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
                    if hi - lo < opts.plateau_tol {
                        return Ok(DissipationTime::Infinite);
                    }
                }
            }
        }
        start = end + 1;
        chunk = (chunk * 2).min(1024);
    }
    Ok(DissipationTime::ExceedsCap(opts.n_cap))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DissipationReport {
    pub eps: f64,
    pub eta: f64,
    pub tau_star: Option<DissipationTime>,
    pub tau_tilde_star: Option<DissipationTime>,
    pub noisy_curve: Option<NormCurve>,
    pub coarse_curve: Option<NormCurve>,
}

/// Both dissipation times with norm curves attached (curves stop at the
/// crossing or at `curve_limit`).
pub fn dissipation_report(
    engine: &dyn Propagator,
    noisy: bool,
    coarse: bool,
    opts: &DissipationOptions,
) -> Result<DissipationReport> {
    let curve_len = |t: DissipationTime| match t {
        DissipationTime::Finite(n) => n.min(opts.curve_limit),
        _ => opts.curve_limit.min(opts.n_cap),
    };
    let (mut tau, mut tau_c, mut curve, mut curve_c) = (None, None, None, None);
    if noisy {
        let t = dissipation_time(engine, NormMode::Noisy, opts)?;
        curve = Some(engine.norm_curve(curve_len(t), NormMode::Noisy)?);
        tau = Some(t);
    }
    if coarse {
        let t = dissipation_time(engine, NormMode::Coarse, opts)?;
        curve_c = Some(engine.norm_curve(curve_len(t), NormMode::Coarse)?);
        tau_c = Some(t);
    }
    Ok(DissipationReport {
        eps: engine.eps(),
        eta: opts.eta,
        tau_star: tau,
        tau_tilde_star: tau_c,
        noisy_curve: curve,
        coarse_curve: curve_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{LinearToralMap, TranslationMap};
    use crate::noise::NoiseKernel;
    use crate::propagation::LatticeOrbitEngine;

    #[test]
    fn doubling_eps_001() {
        let k = NoiseKernel::isotropic(1, 2.0).unwrap();
        let e = LatticeOrbitEngine::new(LinearToralMap::doubling(), k, 0.01).unwrap();
        let t = dissipation_time(&e, NormMode::Noisy, &DissipationOptions::default()).unwrap();
        assert_eq!(t, DissipationTime::Finite(7));
        // 4^7 = 16384 > 7501 > 4^6
        assert!(e.noisy_norm(7).unwrap().log_norm < -1.0);
        assert!(e.noisy_norm(6).unwrap().log_norm >= -1.0);
    }

    #[test]
    fn translation_values() {
        let k = NoiseKernel::isotropic(1, 2.0).unwrap();
        let t = TranslationMap::new(vec![2f64.sqrt() - 1.0]).unwrap();
        let e = LatticeOrbitEngine::new(t, k, 0.1).unwrap();
        let o = DissipationOptions::default();
        assert_eq!(dissipation_time(&e, NormMode::Noisy, &o).unwrap(), DissipationTime::Finite(101));
        assert_eq!(dissipation_time(&e, NormMode::Coarse, &o).unwrap(), DissipationTime::Infinite);
    }

    #[test]
    fn cap_reported() {
        let k = NoiseKernel::isotropic(1, 2.0).unwrap();
        let t = TranslationMap::new(vec![0.3]).unwrap();
        let e = LatticeOrbitEngine::new(t, k, 0.01).unwrap();
        let o = DissipationOptions::default().with_cap(500);
        assert_eq!(dissipation_time(&e, NormMode::Noisy, &o).unwrap(), DissipationTime::ExceedsCap(500));
        assert_eq!(DissipationTime::ExceedsCap(500).to_string(), "EXCEEDS_CAP(500)");
    }

    #[test]
    fn bad_threshold() {
        let k = NoiseKernel::isotropic(1, 2.0).unwrap();
        let e = LatticeOrbitEngine::new(LinearToralMap::doubling(), k, 0.01).unwrap();
        let o = DissipationOptions::default().with_eta(1.5);
        assert!(matches!(dissipation_time(&e, NormMode::Noisy, &o), Err(Error::Config { .. })));
    }

    #[test]
    fn crossing_brackets() {
        let k = NoiseKernel::isotropic(2, 2.0).unwrap();
        for &eps in &[0.05, 0.002] {
            let e = LatticeOrbitEngine::new(LinearToralMap::cat(), k.clone(), eps).unwrap();
            let o = DissipationOptions::default();
            for mode in [NormMode::Noisy, NormMode::Coarse] {
                let n = dissipation_time(&e, mode, &o).unwrap().finite().unwrap();
                assert!(e.norm(n, mode).unwrap().log_norm < -1.0);
                if n > 1 {
                    assert!(e.norm(n - 1, mode).unwrap().log_norm >= -1.0);
                }
            }
        }
    }
}
