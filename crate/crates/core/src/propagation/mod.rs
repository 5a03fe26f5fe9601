//! The noisy propagator `T_eps = G_eps U` and the coarse-grained family
//! `G_eps U^n G_eps`.
//!
//! [`LatticeOrbitEngine`] is exact for linear maps and translations: it
//! turns operator norms into minimization problems over lattice orbits.
//! [`DenseEngine`] works on a truncated mode grid and reports how much mass
//! the truncation dropped.

mod dense;
mod lattice;

pub use dense::{DenseEngine, DEFAULT_LEAK_THRESHOLD};
pub use lattice::{LatticeMap, LatticeOrbitEngine, OrbitMinimum};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::fourier::FourierVector;
use crate::noise::NoiseNorm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Noisy,
    Coarse,
}

impl NormMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMode::Noisy => "noisy",
            NormMode::Coarse => "coarse",
        }
    }
}

/// An operator norm, kept as a logarithm so that very small norms survive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormValue {
    pub log_norm: f64,
    /// Mass dropped by truncation while applying the operator to its top
    /// singular vector; zero for exact engines.
    pub leakage: f64,
    pub warning: Option<String>,
}

impl NormValue {
    pub fn exact(log_norm: f64) -> Self {
        NormValue {
            log_norm,
            leakage: 0.0,
            warning: None,
        }
    }

    pub fn value(&self) -> f64 {
        self.log_norm.exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormEntry {
    pub n: u64,
    pub norm: f64,
    pub log_norm: f64,
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormCurve {
    pub eps: f64,
    pub mode: NormMode,
    pub engine: String,
    pub entries: Vec<NormEntry>,
    pub warnings: Vec<String>,
}

impl NormCurve {
    pub fn max_leakage(&self) -> f64 {
        self.entries.iter().map(|e| e.leakage).fold(0.0, f64::max)
    }

    /// CSV rows `n,norm,leakage`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,norm,leakage\n");
        for e in &self.entries {
            s.push_str(&format!("{},{:e},{:e}\n", e.n, e.norm, e.leakage));
        }
        s
    }
}

pub trait Propagator: Send + Sync {
    fn eps(&self) -> f64;

    fn engine_tag(&self) -> &'static str;

    /// `||G_eps||` over the full nonzero lattice.
    fn noise_norm(&self) -> &NoiseNorm;

    /// `||T_eps^n||` for `n >= 1`.
    fn noisy_norm(&self, n: u64) -> Result<NormValue>;

    /// `||G_eps U^n G_eps||` for `n >= 1`.
    fn coarse_norm(&self, n: u64) -> Result<NormValue>;

    fn norm(&self, n: u64, mode: NormMode) -> Result<NormValue> {
        match mode {
            NormMode::Noisy => self.noisy_norm(n),
            NormMode::Coarse => self.coarse_norm(n),
        }
    }

    /// Norms for `n = start..=end`; engines override this to reuse work.
    fn norm_range(&self, start: u64, end: u64, mode: NormMode) -> Result<Vec<NormValue>> {
        (start.max(1)..=end).map(|n| self.norm(n, mode)).collect()
    }

    fn norm_curve(&self, n_max: u64, mode: NormMode) -> Result<NormCurve> {
        let values = self.norm_range(1, n_max, mode)?;
        let mut entries = Vec::new();
        let mut warnings = Vec::new();
        for (i, v) in values.into_iter().enumerate() {
            let n = i as u64 + 1;
            if let Some(w) = v.warning {
                warnings.push(format!("n = {n}: {w}"));
            }
            entries.push(NormEntry {
                n,
                norm: v.log_norm.exp(),
                log_norm: v.log_norm,
                leakage: v.leakage,
            });
        }
        Ok(NormCurve {
            eps: self.eps(),
            mode,
            engine: self.engine_tag().to_string(),
            entries,
            warnings,
        })
    }

    /// True when the engine can prove that the coarse norm does not depend
    /// on `n`.
    fn coarse_norm_is_constant(&self) -> bool {
        false
    }

    /// True when the map is known to have a Koopman eigenfunction in `L^2_0`.
    fn non_weakly_mixing(&self) -> bool {
        false
    }

    /// `m(f U^n h)` or, with `noisy`, `m(f T_eps^n h)`.
    fn correlation(&self, f: &FourierVector, h: &FourierVector, n: u64, noisy: bool) -> Result<Complex64>;
}
