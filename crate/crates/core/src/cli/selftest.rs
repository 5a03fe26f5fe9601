//! Closed-form oracle checks, runnable from the binary.

use nalgebra::DMatrix;

use crate::analysis::{
    decay_fit, dissipation_time, pseudospectrum_distance, rate_fit, DecayModel, DissipationOptions, DissipationTime,
    RateModel,
};
use crate::fourier::TruncatedGrid;
use crate::maps::{LinearToralMap, TranslationMap};
use crate::noise::{NoiseKernel, RadialTable, SearchPolicy};
use crate::propagation::{DenseEngine, LatticeOrbitEngine, NormMode, Propagator};
use crate::Result;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn doubling_closed_forms() -> Result<Check> {
    let k = NoiseKernel::isotropic(1, 2.0)?;
    let eps = 0.01;
    let e = LatticeOrbitEngine::new(LinearToralMap::doubling(), k, eps)?;
    let mut worst: f64 = 0.0;
    for n in 1..=12u32 {
        let noisy = -(eps * eps) * (4f64.powi(n as i32 + 1) - 4.0) / 3.0;
        let coarse = -(eps * eps) * (1.0 + 4f64.powi(n as i32));
        worst = worst.max(rel(e.noisy_norm(n as u64)?.log_norm, noisy));
        worst = worst.max(rel(e.coarse_norm(n as u64)?.log_norm, coarse));
    }
    let tau = dissipation_time(&e, NormMode::Noisy, &DissipationOptions::default())?;
    Ok(Check {
        name: "doubling closed forms",
        pass: worst < 1e-13 && tau == DissipationTime::Finite(7),
        detail: format!("max relative error {worst:.1e}, tau*(0.01) = {tau}"),
    })
}

fn translation_norms() -> Result<Check> {
    let alpha = 1.5;
    let eps = 0.2;
    let k = NoiseKernel::isotropic(2, alpha)?;
    let e = LatticeOrbitEngine::new(TranslationMap::new(vec![0.5f64.sqrt(), 0.3])?, k, eps)?;
    let mut worst: f64 = 0.0;
    for n in [1u64, 2, 7, 40] {
        worst = worst.max(rel(e.noisy_norm(n)?.log_norm, -(n as f64) * eps.powf(alpha)));
    }
    let coarse = dissipation_time(&e, NormMode::Coarse, &DissipationOptions::default())?;
    Ok(Check {
        name: "translation norms",
        pass: worst < 1e-13 && coarse == DissipationTime::Infinite,
        detail: format!("max relative error {worst:.1e}, coarse time {coarse}"),
    })
}

fn translation_time() -> Result<Check> {
    let k = NoiseKernel::isotropic(1, 2.0)?;
    let e = LatticeOrbitEngine::new(TranslationMap::new(vec![0.25f64.sqrt()])?, k, 0.1)?;
    let tau = dissipation_time(&e, NormMode::Noisy, &DissipationOptions::default())?;
    Ok(Check {
        name: "translation dissipation time",
        pass: tau == DissipationTime::Finite(101),
        detail: format!("tau*(0.1) = {tau}, expected 101"),
    })
}

fn cat_first_step() -> Result<Check> {
    let k = NoiseKernel::isotropic(2, 2.0)?;
    let e = LatticeOrbitEngine::new(LinearToralMap::cat(), k, 0.1)?;
    let v = e.noisy_norm(1)?.value();
    let err = rel(v, (-0.01f64).exp());
    Ok(Check {
        name: "cat map first step",
        pass: err < 1e-14,
        detail: format!("||T^1|| = {v:.10}, relative error {err:.1e}"),
    })
}

fn noise_norm_identity() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        for eps in [0.3, 0.05, 1e-3] {
            let n = NoiseKernel::isotropic(2, alpha)?.noise_norm(eps, SearchPolicy::default())?;
            worst = worst.max(rel(n.log_value, -eps.powf(alpha)));
        }
    }
    Ok(Check {
        name: "noise norm identity",
        pass: worst < 1e-14,
        detail: format!("max relative error {worst:.1e}"),
    })
}

fn custom_gaussian_table() -> Result<Check> {
    let radii: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.005).collect();
    let values: Vec<f64> = radii.iter().map(|r| (-r * r).exp()).collect();
    let table = RadialTable::new(radii.clone(), values.clone())?;
    let env = RadialTable::new(radii, values)?;
    let custom = NoiseKernel::custom(2, 2.0, DMatrix::identity(2, 2), table, Some(env))?;
    let reference = NoiseKernel::isotropic(2, 2.0)?;
    let mut worst: f64 = 0.0;
    for eps in [0.5, 0.1, 0.02] {
        let a = custom.noise_norm(eps, SearchPolicy::default())?.value;
        let b = reference.noise_norm(eps, SearchPolicy::default())?.value;
        worst = worst.max(rel(a, b));
    }
    Ok(Check {
        name: "custom table kernel",
        pass: worst < 1e-4,
        detail: format!("max relative deviation from the Gaussian {worst:.1e}"),
    })
}

fn translation_pseudospectrum() -> Result<Check> {
    let (eps, alpha) = (0.3, 2.0);
    let k = NoiseKernel::isotropic(2, alpha)?;
    let grid = TruncatedGrid::new(2, 6)?;
    let e = DenseEngine::from_translation(&TranslationMap::new(vec![0.5f64.sqrt(), 0.2])?, &k, eps, &grid)?;
    let p = pseudospectrum_distance(&e, 1.0, 256)?;
    let expected = -(-eps.powf(alpha)).exp_m1();
    let err = rel(p.distance, expected);
    Ok(Check {
        name: "translation pseudospectrum",
        pass: err < 1e-8,
        detail: format!("d(1) = {:.10}, expected {expected:.10}", p.distance),
    })
}

fn fits() -> Result<Check> {
    let pts: Vec<(f64, DissipationTime)> = (0..9)
        .map(|i| {
            // ln(1/eps) = m/2, so tau = 2 ln(1/eps) + 3 exactly
            let m = 8 + 3 * i as u64;
            ((-(m as f64) / 2.0).exp(), DissipationTime::Finite(m + 3))
        })
        .collect();
    let rf = rate_fit(&pts)?;
    let r = rf.rate().unwrap_or(f64::NAN);
    let series: Vec<(u64, f64)> = (1..=12).map(|n| (n, 3.0 * 0.6f64.powi(n as i32))).collect();
    let df = decay_fit(&series);
    let sigma = df.sigma().unwrap_or(f64::NAN);
    Ok(Check {
        name: "rate and decay fits",
        pass: rf.model == Some(RateModel::Logarithmic)
            && (r - 2.0).abs() < 1e-9
            && df.model == Some(DecayModel::Exponential)
            && (sigma - 0.6).abs() < 1e-9,
        detail: format!("R* = {r:.4}, sigma = {sigma:.6}"),
    })
}

/// Runs every check; errors count as failures.
pub fn selftest() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Result<Check>); 8] = [
        ("doubling closed forms", doubling_closed_forms),
        ("translation norms", translation_norms),
        ("translation dissipation time", translation_time),
        ("cat map first step", cat_first_step),
        ("noise norm identity", noise_norm_identity),
        ("custom table kernel", custom_gaussian_table),
        ("translation pseudospectrum", translation_pseudospectrum),
        ("rate and decay fits", fits),
    ];
    checks
        .iter()
        .map(|(name, f)| {
            f().unwrap_or_else(|e| Check {
                name,
                pass: false,
                detail: format!("error: {e}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_pass() {
        for c in super::selftest() {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }
}
