//! Least-squares fits of dissipation times and correlation decay.

use serde::Serialize;

use super::dissipation::DissipationTime;
use crate::error::{Error, Result};
use crate::quad::golden_min;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Invalid("line fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Invalid("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LineFit { slope, intercept, r2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `tau ~ R ln(1/eps) + c`
    Logarithmic,
    /// `tau ~ C eps^-beta`
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogarithmicFit {
    pub r_star: f64,
    pub offset: f64,
    pub r2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub c: f64,
    pub beta: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub model: Option<RateModel>,
    pub logarithmic: Option<LogarithmicFit>,
    pub power: Option<PowerFit>,
    pub eps_range: Option<(f64, f64)>,
    pub points_used: usize,
    pub points_excluded: usize,
    /// The same fits on every finite point, to show how much the exclusion
    /// of the large-eps third matters.
    pub all_points: Option<(LogarithmicFit, PowerFit)>,
    pub notice: Option<String>,
}

impl RateFit {
    fn none(notice: String) -> Self {
        RateFit {
            model: None,
            logarithmic: None,
            power: None,
            eps_range: None,
            points_used: 0,
            points_excluded: 0,
            all_points: None,
            notice: Some(notice),
        }
    }

    /// Slope of the selected model (`R*` or `beta`).
    pub fn rate(&self) -> Option<f64> {
        match self.model? {
            RateModel::Logarithmic => self.logarithmic.map(|f| f.r_star),
            RateModel::Power => self.power.map(|f| f.beta),
        }
    }
}

fn both_models(points: &[(f64, f64)]) -> Result<(LogarithmicFit, PowerFit)> {
    let x: Vec<f64> = points.iter().map(|p| (1.0 / p.0).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let a = line_fit(&x, &y)?;
    let b = line_fit(&x, &ly)?;
    Ok((
        LogarithmicFit {
            r_star: a.slope,
            offset: a.intercept,
            r2: a.r2,
        },
        PowerFit {
            c: b.intercept.exp(),
            beta: b.slope,
            r2: b.r2,
        },
    ))
}

/// Fits `tau` against `ln(1/eps)` with both models on the smaller two
/// thirds of the eps values, keeping at least four points.
pub fn rate_fit(points: &[(f64, DissipationTime)]) -> Result<RateFit> {
    let mut finite: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|(e, t)| t.finite().map(|n| (*e, n as f64)))
        .collect();
    if finite.len() < 4 {
        return Ok(RateFit::none(format!(
            "{} finite dissipation times; a fit needs at least 4",
            finite.len()
        )));
    }
    if finite.iter().any(|p| !(p.0 > 0.0 && p.0 < 1.0)) {
        return Err(Error::Invalid("rate fits need eps in (0, 1)".into()));
    }
    finite.sort_by(|a, b| b.0.total_cmp(&a.0));
    let excluded = (finite.len() / 3).min(finite.len() - 4);
    let used = &finite[excluded..];
    let (log_fit, pow_fit) = both_models(used)?;
    let all = both_models(&finite)?;
    let model = if pow_fit.r2 > log_fit.r2 {
        RateModel::Power
    } else {
        RateModel::Logarithmic
    };
    Ok(RateFit {
        model: Some(model),
        logarithmic: Some(log_fit),
        power: Some(pow_fit),
        eps_range: Some((used.last().unwrap().0, used[0].0)),
        points_used: used.len(),
        points_excluded: excluded,
        all_points: Some(all),
        notice: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `C sigma^n`
    Exponential,
    /// `C n^-beta`
    Power,
    /// `C exp(-c e^{gamma n})`
    DoubleExponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentialDecay {
    pub c: f64,
    pub sigma: f64,
    pub r2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerDecay {
    pub c: f64,
    pub beta: f64,
    pub r2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DoubleExponentialDecay {
    pub c: f64,
    pub inner: f64,
    pub gamma: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: Option<DecayModel>,
    pub exponential: Option<ExponentialDecay>,
    pub power: Option<PowerDecay>,
    pub double_exponential: Option<DoubleExponentialDecay>,
    pub notice: Option<String>,
}

impl DecayFit {
    pub fn sigma(&self) -> Option<f64> {
        self.exponential.map(|e| e.sigma)
    }
}

const GAMMA_RANGE: (f64, f64) = (0.05, 8.0);
const TIE: f64 = 1e-9;

fn double_exp_at(n: &[f64], y: &[f64], gamma: f64) -> Option<DoubleExponentialDecay> {
    let z: Vec<f64> = n.iter().map(|v| (gamma * v).exp()).collect();
    let f = line_fit(&z, y).ok()?;
    // y = ln C - c e^{gamma n} needs c > 0
    if !(f.slope < 0.0) {
        return None;
    }
    Some(DoubleExponentialDecay {
        c: f.intercept.exp(),
        inner: -f.slope,
        gamma,
        r2: f.r2,
    })
}

fn double_exp_fit(n: &[f64], y: &[f64]) -> Option<DoubleExponentialDecay> {
    let score = |g: f64| double_exp_at(n, y, g).map_or(1.0, |d| 1.0 - d.r2);
    let (lo, hi) = (GAMMA_RANGE.0.ln(), GAMMA_RANGE.1.ln());
    let steps = 200;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let t = lo + (hi - lo) * i as f64 / steps as f64;
        let s = score(t.exp());
        if s < best.0 {
            best = (s, t);
        }
    }
    let h = (hi - lo) / steps as f64;
    let (t, _) = golden_min(&|t: f64| score(t.exp()), (best.1 - h).max(lo), (best.1 + h).min(hi), 60);
    let cand = [double_exp_at(n, y, t.exp()), double_exp_at(n, y, best.1.exp())];
    cand.into_iter()
        .flatten()
        .max_by(|a, b| a.r2.total_cmp(&b.r2))
}

/// Fits `ln |C(n)|` with the three decay models and picks the largest `R^2`;
/// near-ties go to the simpler model.
pub fn decay_fit(series: &[(u64, f64)]) -> DecayFit {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, c)| c.is_finite() && c.abs() > 0.0)
        .map(|&(n, c)| (n as f64, c.abs().ln()))
        .filter(|p| p.1.is_finite())
        .collect();
    if pts.len() < 6 {
        return DecayFit {
            model: None,
            exponential: None,
            power: None,
            double_exponential: None,
            notice: Some(format!("{} nonzero entries; decay fits need at least 6", pts.len())),
        };
    }
    let n: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let exponential = line_fit(&n, &y).ok().map(|f| ExponentialDecay {
        c: f.intercept.exp(),
        sigma: f.slope.exp(),
        r2: f.r2,
    });
    let pos: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 >= 1.0).collect();
    let power = if pos.len() >= 2 {
        let ln_n: Vec<f64> = pos.iter().map(|p| p.0.ln()).collect();
        let py: Vec<f64> = pos.iter().map(|p| p.1).collect();
        line_fit(&ln_n, &py).ok().map(|f| PowerDecay {
            c: f.intercept.exp(),
            beta: -f.slope,
            r2: f.r2,
        })
    } else {
        None
    };
    let double_exponential = double_exp_fit(&n, &y);
    let mut best: Option<(DecayModel, f64)> = None;
    for (m, r2) in [
        (DecayModel::Exponential, exponential.map(|e| e.r2)),
        (DecayModel::Power, power.map(|p| p.r2)),
        (DecayModel::DoubleExponential, double_exponential.map(|d| d.r2)),
    ] {
        if let Some(r2) = r2 {
            if best.is_none_or(|b| r2 > b.1 + TIE) {
                best = Some((m, r2));
            }
        }
    }
    DecayFit {
        model: best.map(|b| b.0),
        exponential,
        power,
        double_exponential,
        notice: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn geometric_series() {
        let s: Vec<(u64, f64)> = (0..20).map(|n| (n, 0.5f64.powi(n as i32))).collect();
        let f = decay_fit(&s);
        assert_eq!(f.model, Some(DecayModel::Exponential));
        let e = f.exponential.unwrap();
        assert!((e.sigma - 0.5).abs() < 1e-12);
        assert!((e.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_series() {
        let s: Vec<(u64, f64)> = (1..30).map(|n| (n, (n as f64).powi(-2))).collect();
        let f = decay_fit(&s);
        assert_eq!(f.model, Some(DecayModel::Power));
        assert!((f.power.unwrap().beta - 2.0).abs() < 1e-10);
    }

    #[test]
    fn double_exponential_series() {
        let s: Vec<(u64, f64)> = (0..10).map(|n| (n, 3.0 * (-0.01 * (1.3 * n as f64).exp()).exp())).collect();
        let f = decay_fit(&s);
        assert_eq!(f.model, Some(DecayModel::DoubleExponential));
        assert!((f.double_exponential.unwrap().gamma - 1.3).abs() < 1e-4);
    }

    #[test]
    fn degenerate_series() {
        let s: Vec<(u64, f64)> = (0..10).map(|n| (n, 0.0)).collect();
        let f = decay_fit(&s);
        assert!(f.model.is_none() && f.notice.is_some());
    }

    #[test]
    fn rate_fit_needs_four_points() {
        let pts = vec![(0.1, DissipationTime::Finite(3)), (0.01, DissipationTime::Infinite)];
        let f = rate_fit(&pts).unwrap();
        assert!(f.model.is_none());
    }

    #[test]
    fn rate_fit_models() {
        let eps: Vec<f64> = (0..9).map(|i| 10f64.powf(-2.0 - 0.5 * i as f64)).collect();
        let log_pts: Vec<_> = eps
            .iter()
            .map(|&e| (e, DissipationTime::Finite((1.5 * (1.0 / e).ln()).round() as u64 + 3)))
            .collect();
        let f = rate_fit(&log_pts).unwrap();
        assert_eq!(f.model, Some(RateModel::Logarithmic));
        assert_eq!(f.points_excluded, 3);
        assert!((f.rate().unwrap() - 1.5).abs() < 0.1);
        let pow_pts: Vec<_> = eps
            .iter()
            .map(|&e| (e, DissipationTime::Finite((e.powi(-2)).floor() as u64 + 1)))
            .collect();
        let f = rate_fit(&pow_pts).unwrap();
        assert_eq!(f.model, Some(RateModel::Power));
        assert!((f.rate().unwrap() - 2.0).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn decay_selection_scale_invariant(scale in 1e-3f64..1e3, sigma in 0.2f64..0.9) {
            let s: Vec<(u64, f64)> = (0..15).map(|n| (n, sigma.powi(n as i32) * (1.0 + 0.1 * ((n * 7 % 5) as f64 - 2.0) / 10.0))).collect();
            let t: Vec<(u64, f64)> = s.iter().map(|&(n, c)| (n, c * scale)).collect();
            let a = decay_fit(&s);
            let b = decay_fit(&t);
            prop_assert_eq!(a.model, b.model);
            prop_assert!((a.exponential.unwrap().sigma - b.exponential.unwrap().sigma).abs() < 1e-9);
        }
    }
}
