//! Builds maps, kernels and engines from a configuration and runs the
//! requested pipeline over the eps grid.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::config::{EngineChoice, ExperimentConfig, MapSpec};
use super::output::{float, opt_float, text_table, Table, TOOL, VERSION};
use crate::analysis::{
    bound_entry, bound_report, correlation_series, decay_fit, dissipation_report, pseudospectrum_distance,
    rate_fit, supexp_bound_check, BoundEntry, BoundOptions, CorrelationSeries, DissipationOptions,
    DissipationReport, DissipationTime, PseudospectrumPoint, RateFit, SlopeInputs, SupexpReport,
};
use crate::error::{Error, Result};
use crate::fourier::{read_operator, write_operator, Format, TruncatedGrid};
use crate::maps::{
    koopman_assembly, ExpansionProfile, GalerkinKoopman, LinearToralMap, PerturbedCatMap, SampledMap,
    TranslationMap,
};
use crate::propagation::{DenseEngine, LatticeOrbitEngine, NormCurve, NormMode, Propagator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Norms,
    Dissipation,
    Pseudospectrum,
    Correlations,
    Bounds,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Norms => "norms",
            Command::Dissipation => "dissipation",
            Command::Pseudospectrum => "pseudospectrum",
            Command::Correlations => "correlations",
            Command::Bounds => "bounds",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides `run.jobs`.
    pub jobs: Option<usize>,
    /// Restricts the run to one eps.
    pub eps: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub warnings: Vec<String>,
    /// Bound checks that failed, with the offending eps.
    pub violations: Vec<String>,
    pub report: Value,
}

enum Built {
    Linear(LinearToralMap),
    Translation(TranslationMap),
    Perturbed {
        assembly: GalerkinKoopman,
        profile: ExpansionProfile,
    },
}

/// A configuration turned into concrete maps and grids.
pub struct Experiment {
    cfg: ExperimentConfig,
    built: Built,
    grid: TruncatedGrid,
}

#[derive(Serialize, Deserialize)]
struct CachedMasses {
    retained: Vec<f64>,
    leaked: Vec<f64>,
    leaked_shells: Vec<Vec<f64>>,
}

fn galerkin(matrix: &[Vec<i64>], delta: f64, grid: &TruncatedGrid, samples: usize, cache: Option<&Path>) -> Result<(GalerkinKoopman, ExpansionProfile)> {
    let linear = LinearToralMap::new(matrix.to_vec())?;
    let sampled = SampledMap::sample(Arc::new(PerturbedCatMap::new(linear, delta)?), samples)?;
    let profile = sampled.expansion_profile();
    let Some(dir) = cache else {
        return Ok((koopman_assembly(&sampled, grid)?, profile));
    };
    let key = {
        let mut h = Sha256::new();
        h.update(format!("{matrix:?} {:e} {} {samples}", delta, grid.cutoff()).as_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect::<String>()
    };
    let op_path = dir.join(format!("galerkin_{key}.bin"));
    let mass_path = dir.join(format!("galerkin_{key}.json"));
    if op_path.exists() && mass_path.exists() {
        let operator = read_operator(&mut std::io::BufReader::new(std::fs::File::open(&op_path)?), Format::Binary)?;
        let m: CachedMasses = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(&mass_path)?))?;
        if operator.grid() == grid && m.retained.len() == grid.len() {
            return Ok((
                GalerkinKoopman {
                    operator,
                    retained: m.retained,
                    leaked: m.leaked,
                    leaked_shells: m.leaked_shells,
                },
                profile,
            ));
        }
    }
    let assembly = koopman_assembly(&sampled, grid)?;
    std::fs::create_dir_all(dir)?;
    write_operator(&mut std::io::BufWriter::new(std::fs::File::create(&op_path)?), &assembly.operator, Format::Binary)?;
    let m = CachedMasses {
        retained: assembly.retained.clone(),
        leaked: assembly.leaked.clone(),
        leaked_shells: assembly.leaked_shells.clone(),
    };
    std::fs::write(&mass_path, serde_json::to_vec(&m)?)?;
    Ok((assembly, profile))
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let grid = TruncatedGrid::new(cfg.map.dim(), cfg.cutoff)?;
        let built = match &cfg.map {
            MapSpec::Linear { matrix, .. } => Built::Linear(LinearToralMap::new(matrix.clone())?),
            MapSpec::Translation { theta } => Built::Translation(TranslationMap::new(theta.clone())?),
            MapSpec::PerturbedCat { matrix, delta } => {
                let (assembly, profile) = galerkin(matrix, *delta, &grid, cfg.samples, cfg.cache.as_deref())?;
                Built::Perturbed { assembly, profile }
            }
        };
        Ok(Experiment { cfg, built, grid })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn profile(&self) -> ExpansionProfile {
        match &self.built {
            Built::Linear(m) => m.expansion_profile(),
            Built::Translation(m) => m.expansion_profile(),
            Built::Perturbed { profile, .. } => profile.clone(),
        }
    }

    pub fn dense(&self, eps: f64) -> Result<DenseEngine> {
        let k = &self.cfg.kernel;
        let e = match &self.built {
            Built::Linear(m) => DenseEngine::from_linear(m, k, eps, &self.grid)?,
            Built::Translation(m) => DenseEngine::from_translation(m, k, eps, &self.grid)?,
            Built::Perturbed { assembly, .. } => DenseEngine::from_galerkin(assembly, k, eps)?,
        };
        Ok(e.with_leak_threshold(self.cfg.leak_threshold))
    }

    pub fn engine(&self, eps: f64) -> Result<Box<dyn Propagator>> {
        let k = self.cfg.kernel.clone();
        Ok(match (&self.built, self.cfg.engine) {
            (Built::Linear(m), EngineChoice::Lattice) => Box::new(LatticeOrbitEngine::new(m.clone(), k, eps)?),
            (Built::Translation(m), EngineChoice::Lattice) => Box::new(LatticeOrbitEngine::new(m.clone(), k, eps)?),
            _ => Box::new(self.dense(eps)?),
        })
    }

    fn dissipation_options(&self) -> DissipationOptions {
        let mut o = DissipationOptions::default().with_cap(self.cfg.n_cap);
        if let Some(eta) = self.cfg.eta {
            o = o.with_eta(eta);
        }
        o.curve_limit = self.cfg.curve_length;
        o
    }

    /// `1 - <G e, e>` for a Koopman eigenfunction `e`, where one is known.
    fn eigen_defect(&self, engine: &dyn Propagator) -> Option<f64> {
        match &self.built {
            Built::Translation(_) => Some(-engine.noise_norm().log_value.exp_m1()),
            _ => None,
        }
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j);
    }
    b.build().map_err(|e| Error::Invalid(format!("worker pool: {e}")))
}

fn modes(cfg: &ExperimentConfig) -> Vec<NormMode> {
    let mut m = Vec::new();
    if cfg.noisy {
        m.push(NormMode::Noisy);
    }
    if cfg.coarse {
        m.push(NormMode::Coarse);
    }
    m
}

struct EpsResult {
    eps: f64,
    engine: String,
    noise_log_norm: f64,
    dissipation: Option<DissipationReport>,
    curves: Vec<NormCurve>,
    bound: Option<BoundEntry>,
    pseudo: Vec<PseudospectrumPoint>,
    correlations: Vec<CorrelationSeries>,
    supexp: Vec<SupexpReport>,
}

#[derive(Clone, Copy)]
struct Wants {
    norms: bool,
    dissipation: bool,
    bounds: bool,
    pseudo: bool,
    correlations: bool,
}

impl Wants {
    fn of(cmd: Command, cfg: &ExperimentConfig) -> Self {
        let sweep = cmd == Command::Sweep;
        Wants {
            norms: cmd == Command::Norms || sweep,
            dissipation: matches!(cmd, Command::Dissipation | Command::Bounds) || sweep,
            bounds: cmd == Command::Bounds || (sweep && cfg.bounds),
            pseudo: cmd == Command::Pseudospectrum || (sweep && !cfg.radii.is_empty()),
            correlations: cmd == Command::Correlations || (sweep && !cfg.observables.is_empty()),
        }
    }
}

fn per_eps(exp: &Experiment, eps: f64, wants: Wants) -> Result<EpsResult> {
    let cfg = &exp.cfg;
    let engine = exp.engine(eps)?;
    let mut out = EpsResult {
        eps,
        engine: engine.engine_tag().to_string(),
        noise_log_norm: engine.noise_norm().log_value,
        dissipation: None,
        curves: vec![],
        bound: None,
        pseudo: vec![],
        correlations: vec![],
        supexp: vec![],
    };
    if wants.norms {
        for m in modes(cfg) {
            out.curves.push(engine.norm_curve(cfg.curve_length, m)?);
        }
    }
    if wants.dissipation {
        let noisy = cfg.noisy || wants.bounds;
        out.dissipation = Some(dissipation_report(engine.as_ref(), noisy, cfg.coarse, &exp.dissipation_options())?);
    }
    let dense = if wants.bounds || wants.pseudo {
        Some(exp.dense(eps)?)
    } else {
        None
    };
    if wants.bounds {
        let tau = out
            .dissipation
            .as_ref()
            .and_then(|d| d.tau_star)
            .expect("noisy time computed for bounds");
        let mut opts = BoundOptions::new(cfg.kernel.alpha());
        opts.angle_samples = cfg.angle_samples;
        opts.radius_points = cfg.radius_points;
        if let Some(eta) = cfg.eta {
            opts.eta = eta;
        }
        out.bound = Some(bound_entry(
            eps,
            tau,
            out.noise_log_norm,
            dense.as_ref(),
            exp.eigen_defect(engine.as_ref()),
            &opts,
        )?);
    }
    if wants.pseudo {
        let radii = if cfg.radii.is_empty() { vec![1.0] } else { cfg.radii.clone() };
        for r in radii {
            out.pseudo.push(pseudospectrum_distance(dense.as_ref().unwrap(), r, cfg.angle_samples)?);
        }
    }
    if wants.correlations {
        for o in &cfg.observables {
            out.correlations.push(correlation_series(engine.as_ref(), &o.f, &o.h, cfg.correlation_n_max, true)?);
            if let (Some(delta), Built::Linear(map)) = (cfg.supexp_delta, &exp.built) {
                out.supexp.push(supexp_bound_check(
                    map,
                    &cfg.kernel,
                    eps,
                    delta,
                    &o.f,
                    &o.h,
                    1..=cfg.correlation_n_max,
                )?);
            }
        }
    }
    Ok(out)
}

fn tau_cell(t: Option<DissipationTime>) -> String {
    t.map(|t| t.to_string()).unwrap_or_else(|| "-".into())
}

fn model_cell(fit: &Option<RateFit>) -> String {
    match fit {
        Some(f) => match (f.model, f.rate()) {
            (Some(crate::analysis::RateModel::Logarithmic), Some(r)) => format!("logarithmic R*={r:.4}"),
            (Some(crate::analysis::RateModel::Power), Some(r)) => format!("power beta={r:.4}"),
            _ => "-".into(),
        },
        None => "-".into(),
    }
}

/// Runs one subcommand and writes its artifacts into `opts.out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut cfg = cfg.clone();
    if let Some(e) = opts.eps {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::config("--eps", "must be positive"));
        }
        cfg.eps = vec![e];
    }
    if cmd == Command::Correlations && cfg.observables.is_empty() {
        return Err(Error::config("observables", "the correlations command needs at least one [[observables]] entry"));
    }
    let wants = Wants::of(cmd, &cfg);
    let exp = Experiment::new(cfg)?;
    let cfg = &exp.cfg;
    let results: Vec<EpsResult> = pool(opts.jobs.or(cfg.jobs))?
        .install(|| cfg.eps.par_iter().map(|&e| per_eps(&exp, e, wants)).collect::<Result<Vec<_>>>())?;

    std::fs::create_dir_all(&opts.out)?;
    let mut outcome = RunOutcome::default();
    let mut report = Map::new();
    report.insert("tool".into(), json!(TOOL));
    report.insert("version".into(), json!(VERSION));
    report.insert("config_sha256".into(), json!(cfg.hash));
    report.insert("tag".into(), json!(cfg.tag));
    report.insert("command".into(), json!(cmd.as_str()));
    report.insert("eps".into(), json!(cfg.eps));
    report.insert("expansion".into(), serde_json::to_value(exp.profile())?);
    if let (MapSpec::Linear { factor_hint, .. }, Built::Linear(m)) = (&cfg.map, &exp.built) {
        let ent = m.entropy_report(factor_hint.as_deref());
        report.insert(
            "entropy".into(),
            match ent {
                Ok(e) => serde_json::to_value(e)?,
                Err(e) => json!({ "unavailable": e.to_string() }),
            },
        );
    }
    let write = |name: &str, t: &Table, files: &mut Vec<PathBuf>| -> Result<()> {
        let path = opts.out.join(format!("{name}_{}.csv", cfg.tag));
        t.write(&path, &cfg.hash)?;
        files.push(path);
        Ok(())
    };

    for r in &results {
        for c in &r.curves {
            outcome.warnings.extend(c.warnings.iter().map(|w| format!("eps = {:e}: {w}", r.eps)));
        }
    }

    if wants.norms {
        let mut t = Table::new(&["eps", "mode", "engine", "n", "norm", "log_norm", "leakage"]);
        for r in &results {
            for c in &r.curves {
                for e in &c.entries {
                    t.push(vec![
                        float(r.eps),
                        c.mode.as_str().into(),
                        c.engine.clone(),
                        e.n.to_string(),
                        float(e.norm),
                        float(e.log_norm),
                        float(e.leakage),
                    ]);
                }
            }
        }
        write("norms", &t, &mut outcome.files)?;
        report.insert("norm_curves".into(), serde_json::to_value(results.iter().flat_map(|r| &r.curves).collect::<Vec<_>>())?);
    }

    let mut fits: (Option<RateFit>, Option<RateFit>) = (None, None);
    if wants.dissipation {
        let mut t = Table::new(&["eps", "mode", "engine", "tau_kind", "tau", "max_leakage"]);
        let mut noisy_pts = Vec::new();
        let mut coarse_pts = Vec::new();
        for r in &results {
            let d = r.dissipation.as_ref().unwrap();
            let rows = [
                (NormMode::Noisy, d.tau_star, &d.noisy_curve),
                (NormMode::Coarse, d.tau_tilde_star, &d.coarse_curve),
            ];
            for (mode, tau, curve) in rows {
                let Some(tau) = tau else { continue };
                if mode == NormMode::Noisy && !cfg.noisy && cmd != Command::Bounds {
                    continue;
                }
                let (kind, value) = match tau {
                    DissipationTime::Finite(n) => ("finite", n.to_string()),
                    DissipationTime::Infinite => ("infinite", String::new()),
                    DissipationTime::ExceedsCap(c) => ("exceeds_cap", c.to_string()),
                };
                t.push(vec![
                    float(r.eps),
                    mode.as_str().into(),
                    r.engine.clone(),
                    kind.into(),
                    value,
                    curve.as_ref().map(|c| float(c.max_leakage())).unwrap_or_default(),
                ]);
                if let Some(c) = curve {
                    outcome.warnings.extend(c.warnings.iter().map(|w| format!("eps = {:e}: {w}", r.eps)));
                }
                match mode {
                    NormMode::Noisy => noisy_pts.push((r.eps, tau)),
                    NormMode::Coarse => coarse_pts.push((r.eps, tau)),
                }
            }
        }
        write("dissipation", &t, &mut outcome.files)?;
        if cfg.fits || wants.bounds {
            if !noisy_pts.is_empty() {
                fits.0 = Some(rate_fit(&noisy_pts)?);
            }
            if !coarse_pts.is_empty() {
                fits.1 = Some(rate_fit(&coarse_pts)?);
            }
        }
        report.insert(
            "dissipation".into(),
            serde_json::to_value(results.iter().map(|r| r.dissipation.as_ref().unwrap()).collect::<Vec<_>>())?,
        );
        report.insert("rate_fits".into(), json!({ "noisy": fits.0, "coarse": fits.1 }));
    }

    let mut bounds_by_eps = Vec::new();
    if wants.bounds {
        let entries: Vec<BoundEntry> = results.iter().map(|r| r.bound.clone().unwrap()).collect();
        let sigma = match cfg.sigma {
            Some(s) => Some(s),
            None => {
                let dense = exp.dense(cfg.eps[0])?;
                let env = dense.koopman_envelope(cfg.envelope_steps, cfg.s, cfg.s_star)?;
                let series: Vec<(u64, f64)> = env.iter().enumerate().map(|(i, v)| (i as u64 + 1, *v)).collect();
                let fit = decay_fit(&series);
                report.insert("envelope_fit".into(), serde_json::to_value(&fit)?);
                fit.sigma()
            }
        };
        let slopes = SlopeInputs {
            alpha: cfg.kernel.alpha(),
            dim: cfg.map.dim(),
            df_norm: exp.profile().df_norm,
            sigma,
            s: cfg.s,
            s_star: cfg.s_star,
        };
        let rep = bound_report(entries, &slopes, fits.0.as_ref().and_then(|f| f.rate()));
        let mut t = Table::new(&[
            "eps",
            "tau_star",
            "d_one",
            "d_one_leakage",
            "gb_lower",
            "gb_upper1",
            "gb_upper2",
            "r_sp_estimate",
            "noise_cap",
            "weakmix_lower",
            "sandwich_holds",
        ]);
        for e in &rep.entries {
            t.push(vec![
                float(e.eps),
                e.tau_star.to_string(),
                opt_float(e.d_one),
                opt_float(e.d_one_leakage),
                opt_float(e.gb_lower),
                float(e.gb_upper1),
                opt_float(e.gb_upper2),
                opt_float(e.r_sp_estimate),
                float(e.noise_cap),
                opt_float(e.weakmix_lower),
                e.sandwich_holds.to_string(),
            ]);
            if let Some(l) = e.d_one_leakage.filter(|l| *l > cfg.leak_threshold) {
                outcome.warnings.push(format!(
                    "eps = {:e}: pseudomode leakage {l:e} above threshold; raise dense.cutoff",
                    e.eps
                ));
            }
            bounds_by_eps.push((e.gb_lower, Some(e.gb_upper1)));
        }
        write("bounds", &t, &mut outcome.files)?;
        outcome.violations.extend(rep.violations.iter().cloned());
        outcome.warnings.extend(rep.notices.iter().cloned());
        report.insert("bounds".into(), serde_json::to_value(&rep)?);
    }

    if wants.pseudo {
        let mut t = Table::new(&["eps", "r", "distance", "angle", "pseudomode_leakage"]);
        for r in &results {
            for p in &r.pseudo {
                t.push(vec![float(r.eps), float(p.r), float(p.distance), float(p.angle), float(p.pseudomode_leakage)]);
            }
        }
        write("pseudospectrum", &t, &mut outcome.files)?;
        report.insert(
            "pseudospectrum".into(),
            Value::Array(
                results
                    .iter()
                    .map(|r| json!({ "eps": r.eps, "points": r.pseudo }))
                    .collect(),
            ),
        );
    }

    if wants.correlations {
        let mut t = Table::new(&["observable", "eps", "n", "re", "im", "noisy_re", "noisy_im", "norm_bound"]);
        let mut json_series = Vec::new();
        for r in &results {
            for (o, s) in cfg.observables.iter().zip(&r.correlations) {
                for e in &s.entries {
                    t.push(vec![
                        o.name.clone(),
                        float(r.eps),
                        e.n.to_string(),
                        float(e.value.re),
                        float(e.value.im),
                        opt_float(e.noisy.map(|z| z.re)),
                        opt_float(e.noisy.map(|z| z.im)),
                        opt_float(e.norm_bound),
                    ]);
                }
                if !s.cauchy_schwarz_holds || !s.norm_domination_holds {
                    outcome.violations.push(format!(
                        "eps = {:e}: correlation of `{}` exceeds its norm bound",
                        r.eps, o.name
                    ));
                }
                json_series.push(json!({ "observable": o.name, "series": s }));
            }
            for (o, s) in cfg.observables.iter().zip(&r.supexp) {
                if !s.holds && s.skipped.is_none() {
                    outcome.violations.push(format!(
                        "eps = {:e}: super-exponential bound fails for `{}`",
                        r.eps, o.name
                    ));
                }
            }
        }
        write("correlations", &t, &mut outcome.files)?;
        report.insert("correlations".into(), Value::Array(json_series));
        if cfg.supexp_delta.is_some() {
            report.insert(
                "supexp".into(),
                serde_json::to_value(results.iter().flat_map(|r| &r.supexp).collect::<Vec<_>>())?,
            );
        }
    }

    let mut seen = std::collections::HashSet::new();
    outcome.warnings.retain(|w| seen.insert(w.clone()));
    report.insert("warnings".into(), json!(outcome.warnings));
    report.insert("violations".into(), json!(outcome.violations));
    let report = Value::Object(report);
    let path = opts.out.join(format!("report_{}.json", cfg.tag));
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    outcome.files.push(path);
    outcome.report = report;

    // summary
    let mut rows = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let (tau, tau_c) = r
            .dissipation
            .as_ref()
            .map(|d| (d.tau_star, d.tau_tilde_star))
            .unwrap_or_default();
        let (tau, tau_c) = (tau_cell(tau), tau_cell(tau_c));
        let (lower, upper) = bounds_by_eps
            .get(i)
            .copied()
            .unwrap_or((None, Some(1.0 / r.noise_log_norm.abs() + 1.0)));
        rows.push(vec![
            format!("{:.4e}", r.eps),
            tau,
            tau_c,
            lower.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            upper.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            model_cell(&fits.0),
        ]);
    }
    let mut summary = text_table(&["eps", "tau*", "tau~*", "gb_lower", "gb_upper1", "model"], &rows);
    for (label, f) in [("noisy", &fits.0), ("coarse", &fits.1)] {
        if let Some(f) = f {
            summary.push_str(&format!("{label} fit: {}", model_cell(&Some(f.clone()))));
            if let Some(n) = &f.notice {
                summary.push_str(&format!(" ({n})"));
            }
            summary.push('\n');
        }
    }
    outcome.summary = summary;
    Ok(outcome)
}
