//! Upper and lower bounds on dissipation times.

use serde::Serialize;

use super::dissipation::DissipationTime;
use super::pseudospectrum::{pseudospectrum_distance, spectral_radius_estimate, DEFAULT_ANGLES};
use crate::error::Result;
use crate::propagation::DenseEngine;

/// Relative rounding allowance in the sandwich comparison.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundOptions {
    pub alpha: f64,
    pub eta: f64,
    pub angle_samples: usize,
    pub radius_points: usize,
    /// Power used for the spectral radius estimate.
    pub gelfand_power: u64,
}

impl BoundOptions {
    pub fn new(alpha: f64) -> Self {
        BoundOptions {
            alpha,
            eta: (-1f64).exp(),
            angle_samples: DEFAULT_ANGLES,
            radius_points: 16,
            gelfand_power: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEntry {
    pub eps: f64,
    pub tau_star: DissipationTime,
    /// `d_eps(1)` on the dense grid.
    pub d_one: Option<f64>,
    pub d_one_leakage: Option<f64>,
    pub gb_lower: Option<f64>,
    pub gb_upper1: f64,
    pub gb_upper2: Option<f64>,
    pub r_sp_estimate: Option<f64>,
    /// `eps^-alpha`.
    pub noise_cap: f64,
    /// Lower bound from an eigenfunction of `U` with known defect.
    pub weakmix_lower: Option<f64>,
    pub sandwich_holds: bool,
}

/// Bounds at one eps. `noise_log_norm` is `ln ||G_eps||`; `dense` supplies
/// the pseudospectral quantities; `eigen_defect` is `1 - <G e, e>` for a
/// Koopman eigenfunction `e` when the map is not weakly mixing.
pub fn bound_entry(
    eps: f64,
    tau_star: DissipationTime,
    noise_log_norm: f64,
    dense: Option<&DenseEngine>,
    eigen_defect: Option<f64>,
    opts: &BoundOptions,
) -> Result<BoundEntry> {
    let gb_upper1 = 1.0 / noise_log_norm.abs() + 1.0;
    let mut d_one = None;
    let mut d_one_leakage = None;
    let mut gb_lower = None;
    let mut gb_upper2 = None;
    let mut r_sp = None;
    if let Some(engine) = dense {
        let p = pseudospectrum_distance(engine, 1.0, opts.angle_samples)?;
        d_one = Some(p.distance);
        d_one_leakage = Some(p.pseudomode_leakage);
        gb_lower = Some((1.0 - opts.eta) / p.distance);
        let r0 = spectral_radius_estimate(engine, opts.gelfand_power)?;
        r_sp = Some(r0);
        if r0 < 1.0 {
            let m = opts.radius_points;
            let mut best = f64::INFINITY;
            for i in 1..=m {
                let r = r0 * (1.0 / r0).powf(i as f64 / (m + 1) as f64);
                let d = pseudospectrum_distance(engine, r, opts.angle_samples)?.distance;
                if d > 0.0 {
                    best = best.min((1.0 / (opts.eta * d)).ln() / r.ln().abs());
                }
            }
            gb_upper2 = best.is_finite().then_some(best);
        }
    }
    let weakmix_lower = eigen_defect.filter(|d| *d > 0.0).map(|d| (1.0 - opts.eta) / d - 1.0);
    let sandwich_holds = match tau_star.finite() {
        Some(t) => {
            // the upper bound is attained exactly when eps^-alpha is an integer
            let t = t as f64;
            let slack = 1.0 + BOUND_SLACK;
            gb_lower.is_none_or(|l| l <= t * slack)
                && t <= gb_upper1 * slack
                && weakmix_lower.is_none_or(|w| w <= t * slack)
        }
        None => true,
    };
    Ok(BoundEntry {
        eps,
        tau_star,
        d_one,
        d_one_leakage,
        gb_lower,
        gb_upper1,
        gb_upper2,
        r_sp_estimate: r_sp,
        noise_cap: eps.powf(-opts.alpha),
        weakmix_lower,
        sandwich_holds,
    })
}

/// `(alpha ^ 1) / ln ||DF||_inf`, the slope of the lower bound in `ln(1/eps)`.
pub fn nln_slope(alpha: f64, df_norm: f64) -> Option<f64> {
    (df_norm > 1.0).then(|| alpha.min(1.0) / df_norm.ln())
}

/// `(d + s + s_*) / |ln sigma|`, the slope of the correlation upper bound.
pub fn corr_slope(dim: usize, s: f64, s_star: f64, sigma: f64) -> Option<f64> {
    (sigma > 0.0 && sigma < 1.0).then(|| (dim as f64 + s + s_star) / sigma.ln().abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub entries: Vec<BoundEntry>,
    pub nln_slope: Option<f64>,
    pub corr_slope: Option<f64>,
    pub measured_rate: Option<f64>,
    pub notices: Vec<String>,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeInputs {
    pub alpha: f64,
    pub dim: usize,
    pub df_norm: f64,
    pub sigma: Option<f64>,
    pub s: f64,
    pub s_star: f64,
}

pub fn bound_report(entries: Vec<BoundEntry>, slopes: &SlopeInputs, measured_rate: Option<f64>) -> BoundReport {
    let mut notices = Vec::new();
    let nln = nln_slope(slopes.alpha, slopes.df_norm);
    if nln.is_none() {
        notices.push("||DF|| <= 1: no logarithmic lower bound".to_string());
    }
    let corr = match slopes.sigma {
        Some(s) => {
            let c = corr_slope(slopes.dim, slopes.s, slopes.s_star, s);
            if c.is_none() {
                notices.push(format!("correlation rate {s} is not in (0, 1); correlation bound omitted"));
            }
            c
        }
        None => {
            notices.push("no correlation fit; correlation bound omitted".to_string());
            None
        }
    };
    let violations = entries
        .iter()
        .filter(|e| !e.sandwich_holds)
        .map(|e| {
            format!(
                "eps = {:e}: tau* = {} outside [{}, {:.4}]",
                e.eps,
                e.tau_star,
                e.gb_lower.map_or("-".into(), |v| format!("{v:.4}")),
                e.gb_upper1
            )
        })
        .collect();
    BoundReport {
        entries,
        nln_slope: nln,
        corr_slope: corr,
        measured_rate,
        notices,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::TruncatedGrid;
    use crate::maps::TranslationMap;
    use crate::noise::NoiseKernel;

    #[test]
    fn cat_nln_slope() {
        let lam = (3.0 + 5f64.sqrt()) / 2.0;
        let s = nln_slope(2.0, lam).unwrap();
        assert!((s - 1.0390).abs() < 1e-4);
        assert!(s < 2.0781);
    }

    #[test]
    fn doubling_corr_slope_limit() {
        // sigma = 2^-s with s_* = 0, d = 1
        let big = 200.0;
        let c = corr_slope(1, big, 0.0, 2f64.powf(-big)).unwrap();
        assert!((c - 1.0 / 2f64.ln()).abs() < 0.01);
    }

    #[test]
    fn upper1_for_isotropic_kernel() {
        for &eps in &[0.1, 0.03] {
            let e = bound_entry(eps, DissipationTime::Finite(3), -eps * eps, None, None, &BoundOptions::new(2.0)).unwrap();
            assert!((e.gb_upper1 - (1.0 / (eps * eps) + 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn translation_sandwich() {
        let k = NoiseKernel::isotropic(1, 2.0).unwrap();
        let t = TranslationMap::new(vec![2f64.sqrt() - 1.0]).unwrap();
        let eps = 0.3;
        let e = DenseEngine::from_translation(&t, &k, eps, &TruncatedGrid::new(1, 8).unwrap()).unwrap();
        let g = (-eps * eps).exp();
        let mut o = BoundOptions::new(2.0);
        o.angle_samples = 64;
        o.radius_points = 4;
        let b = bound_entry(eps, DissipationTime::Finite(12), -eps * eps, Some(&e), Some(1.0 - g), &o).unwrap();
        assert!(b.sandwich_holds, "{b:?}");
        assert!((b.d_one.unwrap() - (1.0 - g)).abs() < 1e-10);
    }
}
