//! Experiment configuration: a sectioned key-value file (TOML syntax).

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fourier::FourierVector;
use crate::noise::{NoiseKernel, RadialTable};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub tag: Option<String>,
    pub map: MapSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub epsilon: EpsilonSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub dense: DenseSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub observables: Vec<ObservableSection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub kind: String,
    pub matrix: Option<Vec<Vec<i64>>>,
    pub theta: Option<Vec<f64>>,
    pub delta: Option<f64>,
    /// Monic factors (ascending coefficients) of the characteristic
    /// polynomial, for degrees the built-in factorizer does not handle.
    pub factor_hint: Option<Vec<Vec<i64>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "default_noise_kind")]
    pub kind: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub q: Option<Vec<Vec<f64>>>,
    /// CSV of `radius,value` rows for a custom radial symbol.
    pub table: Option<String>,
    pub envelope: Option<String>,
}

fn default_noise_kind() -> String {
    "alpha_stable".into()
}

fn default_alpha() -> f64 {
    2.0
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            kind: default_noise_kind(),
            alpha: default_alpha(),
            q: None,
            table: None,
            envelope: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSection {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_modes")]
    pub modes: String,
    #[serde(default = "default_cap")]
    pub n_cap: u64,
    pub eta: Option<f64>,
    #[serde(default = "default_engine")]
    pub engine: String,
    #[serde(default = "default_curve")]
    pub curve_length: u64,
    pub jobs: Option<usize>,
}

fn default_modes() -> String {
    "both".into()
}
fn default_cap() -> u64 {
    100_000
}
fn default_engine() -> String {
    "auto".into()
}
fn default_curve() -> u64 {
    40
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            modes: default_modes(),
            n_cap: default_cap(),
            eta: None,
            engine: default_engine(),
            curve_length: default_curve(),
            jobs: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseSection {
    #[serde(default = "default_cutoff")]
    pub cutoff: i64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_leak")]
    pub leak_threshold: f64,
    /// Directory for cached Galerkin operators, relative to the config file.
    pub cache: Option<String>,
}

fn default_cutoff() -> i64 {
    16
}
fn default_samples() -> usize {
    64
}
fn default_leak() -> f64 {
    crate::propagation::DEFAULT_LEAK_THRESHOLD
}

impl Default for DenseSection {
    fn default() -> Self {
        DenseSection {
            cutoff: default_cutoff(),
            samples: default_samples(),
            leak_threshold: default_leak(),
            cache: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "yes")]
    pub fits: bool,
    #[serde(default)]
    pub bounds: bool,
    #[serde(default)]
    pub pseudospectrum_radii: Vec<f64>,
    #[serde(default = "default_angles")]
    pub angle_samples: usize,
    /// Radii between the spectral radius estimate and 1 for the second
    /// upper bound.
    #[serde(default = "default_radius_points")]
    pub radius_points: usize,
    pub s: Option<f64>,
    pub s_star: Option<f64>,
    /// Fixed correlation rate; otherwise fitted from the Koopman envelope.
    pub sigma: Option<f64>,
    #[serde(default = "default_envelope_steps")]
    pub envelope_steps: u64,
    #[serde(default = "default_corr_n")]
    pub correlation_n_max: u64,
    /// Enables the super-exponential correlation check with this delta.
    pub supexp_delta: Option<f64>,
}

fn yes() -> bool {
    true
}
fn default_angles() -> usize {
    crate::analysis::DEFAULT_ANGLES
}
fn default_radius_points() -> usize {
    16
}
fn default_envelope_steps() -> u64 {
    6
}
fn default_corr_n() -> u64 {
    20
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            fits: true,
            bounds: false,
            pseudospectrum_radii: vec![],
            angle_samples: default_angles(),
            radius_points: default_radius_points(),
            s: None,
            s_star: None,
            sigma: None,
            envelope_steps: default_envelope_steps(),
            correlation_n_max: default_corr_n(),
            supexp_delta: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub mode: Vec<i64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSection {
    pub name: String,
    pub f: Vec<TermSection>,
    pub h: Vec<TermSection>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapSpec {
    Linear { matrix: Vec<Vec<i64>>, factor_hint: Option<Vec<Vec<i64>>> },
    Translation { theta: Vec<f64> },
    PerturbedCat { matrix: Vec<Vec<i64>>, delta: f64 },
}

impl MapSpec {
    pub fn dim(&self) -> usize {
        match self {
            MapSpec::Linear { matrix, .. } | MapSpec::PerturbedCat { matrix, .. } => matrix.len(),
            MapSpec::Translation { theta } => theta.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineChoice {
    Lattice,
    Dense,
}

#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub f: FourierVector,
    pub h: FourierVector,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub tag: String,
    pub map: MapSpec,
    pub kernel: NoiseKernel,
    pub eps: Vec<f64>,
    pub noisy: bool,
    pub coarse: bool,
    pub n_cap: u64,
    pub eta: Option<f64>,
    pub engine: EngineChoice,
    pub curve_length: u64,
    pub jobs: Option<usize>,
    pub cutoff: i64,
    pub samples: usize,
    pub leak_threshold: f64,
    pub cache: Option<PathBuf>,
    pub fits: bool,
    pub bounds: bool,
    pub radii: Vec<f64>,
    pub angle_samples: usize,
    pub radius_points: usize,
    pub s: f64,
    pub s_star: f64,
    pub sigma: Option<f64>,
    pub envelope_steps: u64,
    pub correlation_n_max: u64,
    pub supexp_delta: Option<f64>,
    pub observables: Vec<Observable>,
    /// sha256 of the configuration text.
    pub hash: String,
}

fn cfg<T>(path: &str, msg: impl Into<String>) -> Result<T> {
    Err(Error::config(path, msg))
}

fn read_table(base: &Path, file: &str, field: &str) -> Result<RadialTable> {
    let path: PathBuf = base.join(file);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(&path)
        .map_err(|e| Error::config(field, format!("cannot read {}: {e}", path.display())))?;
    let (mut radii, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::config(field, format!("{}: {e}", path.display())))?;
        let parse = |s: Option<&str>| s.and_then(|v| v.parse::<f64>().ok());
        match (parse(rec.get(0)), parse(rec.get(1))) {
            (Some(r), Some(v)) => {
                radii.push(r);
                values.push(v);
            }
            // a header row is allowed
            _ if i == 0 => continue,
            _ => return cfg(field, format!("{}: row {} is not `radius,value`", path.display(), i + 1)),
        }
    }
    RadialTable::new(radii, values).map_err(|e| match e {
        Error::Config { message, .. } => Error::config(field, message),
        other => other,
    })
}

fn terms(dim: usize, list: &[TermSection], field: &str) -> Result<FourierVector> {
    if list.is_empty() {
        return cfg(field, "an observable needs at least one term");
    }
    let mut out = Vec::new();
    for (i, t) in list.iter().enumerate() {
        if t.mode.len() != dim {
            return cfg(&format!("{field}[{i}].mode"), format!("mode must have {dim} entries"));
        }
        if t.mode.iter().all(|&c| c == 0) {
            return cfg(&format!("{field}[{i}].mode"), "observables have zero mean; the zero mode is not allowed");
        }
        out.push((t.mode.clone(), Complex64::new(t.re, t.im)));
    }
    FourierVector::from_terms(dim, &out)
}

fn square(rows: &[Vec<i64>], field: &str) -> Result<()> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return cfg(field, "matrix must be square and nonempty");
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
        Self::parse(&text, base, &stem)
    }

    pub fn parse(text: &str, base: &Path, default_tag: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = e
                .span()
                .map(|s| {
                    let line = text[..s.start].lines().count().max(1);
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<file>".into());
            Error::config(field, msg)
        })?;
        let hash = {
            let mut h = Sha256::new();
            h.update(text.as_bytes());
            h.finalize().iter().map(|b| format!("{b:02x}")).collect::<String>()
        };
        Self::validate(raw, base, default_tag, hash)
    }

    fn validate(raw: RawConfig, base: &Path, default_tag: &str, hash: String) -> Result<Self> {
        let tag = raw.tag.clone().unwrap_or_else(|| default_tag.to_string());
        if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return cfg("tag", "tag must be nonempty and use only letters, digits, '_' or '-'");
        }
        let map = match raw.map.kind.as_str() {
            "linear" => {
                let m = raw.map.matrix.clone().ok_or_else(|| Error::config("map.matrix", "required for linear maps"))?;
                square(&m, "map.matrix")?;
                MapSpec::Linear { matrix: m, factor_hint: raw.map.factor_hint.clone() }
            }
            "translation" => {
                let t = raw.map.theta.clone().ok_or_else(|| Error::config("map.theta", "required for translations"))?;
                if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
                    return cfg("map.theta", "rotation vector must be nonempty and finite");
                }
                MapSpec::Translation { theta: t }
            }
            "perturbed_cat" => {
                let m = raw.map.matrix.clone().unwrap_or_else(|| vec![vec![2, 1], vec![1, 1]]);
                square(&m, "map.matrix")?;
                if m.len() != 2 {
                    return cfg("map.matrix", "the perturbed family is two-dimensional");
                }
                let delta = raw.map.delta.ok_or_else(|| Error::config("map.delta", "required for perturbed_cat"))?;
                if !delta.is_finite() {
                    return cfg("map.delta", "must be finite");
                }
                MapSpec::PerturbedCat { matrix: m, delta }
            }
            other => return cfg("map.kind", format!("unknown map kind `{other}` (linear, translation, perturbed_cat)")),
        };
        let d = map.dim();
        let n = &raw.noise;
        let q = match &n.q {
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return cfg("noise.q", format!("Q must be {d}x{d}"));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
            None => DMatrix::identity(d, d),
        };
        let kernel = match n.kind.as_str() {
            "alpha_stable" => {
                if n.table.is_some() || n.envelope.is_some() {
                    return cfg("noise.table", "tables belong to custom kernels");
                }
                NoiseKernel::alpha_stable(d, n.alpha, q)?
            }
            "custom" => {
                let file = n.table.as_ref().ok_or_else(|| Error::config("noise.table", "required for custom kernels"))?;
                let table = read_table(base, file, "noise.table")?;
                let envelope = n.envelope.as_ref().map(|f| read_table(base, f, "noise.envelope")).transpose()?;
                NoiseKernel::custom(d, n.alpha, q, table, envelope)?
            }
            other => return cfg("noise.kind", format!("unknown kernel `{other}` (alpha_stable, custom)")),
        };
        let e = &raw.epsilon;
        if !(e.start > 0.0 && e.stop > 0.0 && e.start.is_finite()) {
            return cfg("epsilon", "start and stop must be positive");
        }
        if e.count == 0 {
            return cfg("epsilon.count", "need at least one point");
        }
        if e.count > 1 && !(e.stop < e.start) {
            return cfg("epsilon", "the grid must be strictly decreasing (stop < start)");
        }
        let eps: Vec<f64> = if e.count == 1 {
            vec![e.start]
        } else {
            let (a, b) = (e.start.log10(), e.stop.log10());
            (0..e.count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (e.count - 1) as f64))
                .collect()
        };
        let r = &raw.run;
        let (noisy, coarse) = match r.modes.as_str() {
            "noisy" => (true, false),
            "coarse" => (false, true),
            "both" => (true, true),
            other => return cfg("run.modes", format!("unknown mode `{other}` (noisy, coarse, both)")),
        };
        if r.n_cap == 0 {
            return cfg("run.n_cap", "must be at least 1");
        }
        if let Some(eta) = r.eta {
            if !(eta > 0.0 && eta < 1.0) {
                return cfg("run.eta", "threshold must lie in (0, 1)");
            }
        }
        if r.jobs == Some(0) {
            return cfg("run.jobs", "must be at least 1");
        }
        let engine = match (r.engine.as_str(), &map) {
            ("auto", MapSpec::PerturbedCat { .. }) | ("dense", _) => EngineChoice::Dense,
            ("auto", _) | ("lattice", MapSpec::Linear { .. }) | ("lattice", MapSpec::Translation { .. }) => {
                EngineChoice::Lattice
            }
            ("lattice", _) => return cfg("run.engine", "the lattice engine needs a linear map or a translation"),
            (other, _) => return cfg("run.engine", format!("unknown engine `{other}` (auto, lattice, dense)")),
        };
        let dn = &raw.dense;
        if dn.cutoff < 1 {
            return cfg("dense.cutoff", "K must be at least 1");
        }
        let a = &raw.analysis;
        let needs_dense = engine == EngineChoice::Dense || a.bounds || !a.pseudospectrum_radii.is_empty();
        if needs_dense && matches!(map, MapSpec::PerturbedCat { .. }) && (dn.samples as i64) < 4 * dn.cutoff {
            return cfg(
                "dense.samples",
                format!("aliasing guard needs N >= 4K, got N = {}, K = {}", dn.samples, dn.cutoff),
            );
        }
        if !(dn.leak_threshold > 0.0) {
            return cfg("dense.leak_threshold", "must be positive");
        }
        if a.pseudospectrum_radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return cfg("analysis.pseudospectrum_radii", "radii must be positive");
        }
        if a.angle_samples < 64 {
            return cfg("analysis.angle_samples", "at least 64 angles");
        }
        if a.radius_points == 0 {
            return cfg("analysis.radius_points", "at least one radius");
        }
        if a.supexp_delta.is_some() && !matches!(map, MapSpec::Linear { .. }) {
            return cfg("analysis.supexp_delta", "the super-exponential check needs a linear map");
        }
        if let Some(dl) = a.supexp_delta {
            if !(dl > 0.0 && dl < 1.0) {
                return cfg("analysis.supexp_delta", "delta must lie in (0, 1)");
            }
        }
        // Anosov-type maps: s = s_* = 1; expanding maps: s_* = 0
        let expanding = matches!(&map, MapSpec::Linear { matrix, .. } if {
            let m = DMatrix::from_fn(d, d, |i, j| matrix[i][j] as f64);
            m.singular_values().min() > 1.0
        });
        let s = a.s.unwrap_or(1.0);
        let s_star = a.s_star.unwrap_or(if expanding { 0.0 } else { 1.0 });
        let mut observables = Vec::new();
        for (i, o) in raw.observables.iter().enumerate() {
            observables.push(Observable {
                name: o.name.clone(),
                f: terms(d, &o.f, &format!("observables[{i}].f"))?,
                h: terms(d, &o.h, &format!("observables[{i}].h"))?,
            });
        }
        Ok(ExperimentConfig {
            tag,
            map,
            kernel,
            eps,
            noisy,
            coarse,
            n_cap: r.n_cap,
            eta: r.eta,
            engine,
            curve_length: r.curve_length,
            jobs: r.jobs,
            cutoff: dn.cutoff,
            samples: dn.samples,
            leak_threshold: dn.leak_threshold,
            cache: dn.cache.as_ref().map(|c| base.join(c)),
            fits: a.fits,
            bounds: a.bounds,
            radii: a.pseudospectrum_radii.clone(),
            angle_samples: a.angle_samples,
            radius_points: a.radius_points,
            s,
            s_star,
            sigma: a.sigma,
            envelope_steps: a.envelope_steps,
            correlation_n_max: a.correlation_n_max,
            supexp_delta: a.supexp_delta,
            observables,
            hash,
        })
    }
}
