//! `d_eps(r) = min_{|lambda| = r} sigma_min(lambda - T_eps)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagation::DenseEngine;
use crate::quad::golden_min_until;

pub const DEFAULT_ANGLES: usize = 256;
const REFINE_POINTS: usize = 3;
const REFINE_ROUNDS: usize = 3;
// enough to shrink any bracket to a few ulps
const GOLDEN_ITERS: usize = 80;
// angle error below 1e-6 d keeps the relative error of d near 1e-12
const ANGLE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudospectrumPoint {
    pub r: f64,
    /// `d_eps(r)`; its inverse is the sup of the resolvent norm on the circle.
    pub distance: f64,
    pub angle: f64,
    /// Mass the minimizing singular vector loses in one step.
    pub pseudomode_leakage: f64,
}

/// Uniform angle sweep followed by golden-section refinement around the
/// three smallest samples.
pub fn pseudospectrum_distance(engine: &DenseEngine, r: f64, angle_samples: usize) -> Result<PseudospectrumPoint> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::config("analysis.pseudospectrum_radii", format!("radius must be positive, got {r}")));
    }
    if angle_samples < 64 {
        return Err(Error::config(
            "analysis.angle_samples",
            format!("at least 64 angles are needed, got {angle_samples}"),
        ));
    }
    let sigma = |theta: f64| -> Result<f64> { engine.resolvent_sigma_min(Complex64::from_polar(r, theta)) };
    let step = 2.0 * PI / angle_samples as f64;
    let samples: Vec<(f64, f64)> = (0..angle_samples)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * step;
            sigma(t).map(|s| (t, s))
        })
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].1.total_cmp(&samples[b].1).then(a.cmp(&b)));
    let mut best: Vec<(f64, f64)> = order.iter().take(REFINE_POINTS).map(|&i| samples[i]).collect();
    // errors inside the golden search are rare; keep the first one
    let failure = std::sync::Mutex::new(None);
    let f = |t: f64| match sigma(t) {
        Ok(v) => v,
        Err(e) => {
            failure.lock().unwrap().get_or_insert(e);
            f64::INFINITY
        }
    };
    let mut width = step;
    for _ in 0..REFINE_ROUNDS {
        for b in best.iter_mut() {
            let (t, v) = golden_min_until(&f, b.0 - width, b.0 + width, GOLDEN_ITERS, ANGLE_TOL / r);
            if v < b.1 {
                *b = (t, v);
            }
        }
        width /= 4.0;
    }
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let (angle, _) = best
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one sample");
    let angle = angle.rem_euclid(2.0 * PI);
    let (distance, _, leak) = engine.pseudomode(Complex64::from_polar(r, angle))?;
    Ok(PseudospectrumPoint {
        r,
        distance,
        angle,
        pseudomode_leakage: leak,
    })
}

/// Gelfand estimate `||T^m||^{1/m}` of the spectral radius, floored.
pub fn spectral_radius_estimate(engine: &DenseEngine, m: u64) -> Result<f64> {
    use crate::propagation::Propagator;
    let v = engine.noisy_norm(m)?;
    Ok((v.log_norm / m as f64).exp().max(1e-3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::TruncatedGrid;
    use crate::maps::{LinearToralMap, TranslationMap};
    use crate::noise::NoiseKernel;

    #[test]
    fn translation_distance_is_one_minus_symbol() {
        let k = NoiseKernel::isotropic(1, 2.0).unwrap();
        let t = TranslationMap::new(vec![(5f64.sqrt() - 1.0) / 2.0]).unwrap();
        let eps = 0.2;
        let e = DenseEngine::from_translation(&t, &k, eps, &TruncatedGrid::new(1, 8).unwrap()).unwrap();
        let p = pseudospectrum_distance(&e, 1.0, 256).unwrap();
        let want = 1.0 - (-eps * eps).exp();
        assert!((p.distance - want).abs() < 1e-10, "{} {}", p.distance, want);
    }

    #[test]
    fn dissipated_operator_gives_one() {
        let k = NoiseKernel::isotropic(1, 2.0).unwrap();
        let e = DenseEngine::from_linear(&LinearToralMap::doubling(), &k, 100.0, &TruncatedGrid::new(1, 4).unwrap()).unwrap();
        let p = pseudospectrum_distance(&e, 1.0, 64).unwrap();
        assert!((p.distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_angles() {
        let k = NoiseKernel::isotropic(1, 2.0).unwrap();
        let e = DenseEngine::from_linear(&LinearToralMap::doubling(), &k, 0.1, &TruncatedGrid::new(1, 4).unwrap()).unwrap();
        assert!(pseudospectrum_distance(&e, 1.0, 10).is_err());
    }
}
