//! Noise kernels given by their Fourier symbols.
//!
//! The noise operator `G_eps` is diagonal on Fourier modes with eigenvalue
//! `g^(eps k)`. Two kinds of kernel are supported: symmetric alpha-stable
//! kernels with `g^(xi) = exp(-(xi^T Q xi)^(alpha/2))`, and custom radial
//! symbols supplied as tables (linear interpolation in the Q-norm, constant
//! beyond the last sample) together with a decay envelope.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fourier::{shell, FourierVector, ModeIndex};
use crate::quad::{adaptive_simpson, golden_min, KahanSum};

/// Piecewise-linear table `r -> value`, constant beyond the last sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialTable {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl RadialTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::Invalid("a radial table needs at least two (r, value) rows".into()));
        }
        if radii[0] != 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("table radii must start at 0 and increase strictly".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("table values must be finite".into()));
        }
        Ok(RadialTable { radii, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let last = self.radii.len() - 1;
        if r >= self.radii[last] {
            return self.values[last];
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        let t = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelKind {
    AlphaStable,
    /// `symbol` is evaluated at the Q-norm of `xi`; `envelope`, when given,
    /// bounds `sup_{|xi| >= r} |g^(xi)|` in the Euclidean norm.
    Custom {
        symbol: RadialTable,
        envelope: Option<RadialTable>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseKernel {
    dim: usize,
    alpha: f64,
    q: DMatrix<f64>,
    q_min_eig: f64,
    kind: KernelKind,
}

/// Sup of the symbol over the nonzero lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseNorm {
    pub value: f64,
    /// `ln value`, kept separately so that `1 - value` can be formed without
    /// cancellation.
    pub log_value: f64,
    pub argmax: ModeIndex,
}

/// Shell schedule for lattice searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchPolicy {
    pub max_radius: i64,
}

impl Default for SearchPolicy {
    fn default() -> Self {
        SearchPolicy { max_radius: 1 << 12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    Analytic,
    Quadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub alpha: f64,
    pub value: f64,
    pub method: MomentMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentCheckEntry {
    pub xi: Vec<f64>,
    pub defect: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentCheck {
    pub alpha: f64,
    pub c_alpha: f64,
    pub moment: MomentEstimate,
    pub entries: Vec<MomentCheckEntry>,
    /// `(|xi|, (1 - g^(xi)) / |xi|^2)` for the smallest nonzero samples, only
    /// when `alpha = 2`.
    pub small_xi_ratios: Vec<(f64, f64)>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonEntry {
    pub eps: f64,
    pub lattice_sum: f64,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonReport {
    pub integral: f64,
    pub entries: Vec<PoissonEntry>,
    /// Discrepancies below this level are treated as rounding noise.
    pub floor: f64,
    /// Nonincreasing as `eps` decreases, up to `floor`.
    pub monotone: bool,
}

/// `sup_{x != 0} (1 - cos 2 pi x) / |x|^alpha`.
pub fn cosine_bound_constant(alpha: f64) -> f64 {
    if alpha >= 2.0 {
        return 2.0 * PI * PI;
    }
    let f = |x: f64| (1.0 - (2.0 * PI * x).cos()) / x.abs().powf(alpha);
    // beyond x = 1 the ratio is below 2 < f(1/2)
    let n = 4000;
    let (mut best_x, mut best) = (0.5, f(0.5));
    for i in 1..=n {
        let x = i as f64 / n as f64;
        if f(x) > best {
            best = f(x);
            best_x = x;
        }
    }
    let h = 1.0 / n as f64;
    let (_, neg) = golden_min(&|x| -f(x), (best_x - h).max(1e-9), best_x + h, 100);
    best.max(-neg)
}

impl NoiseKernel {
    pub fn alpha_stable(dim: usize, alpha: f64, q: DMatrix<f64>) -> Result<Self> {
        Self::build(dim, alpha, q, KernelKind::AlphaStable)
    }

    /// Alpha-stable kernel with `Q = I`.
    pub fn isotropic(dim: usize, alpha: f64) -> Result<Self> {
        Self::alpha_stable(dim, alpha, DMatrix::identity(dim, dim))
    }

    /// Gaussian kernel `g^(xi) = exp(-xi^T Q xi)`.
    pub fn gaussian(q: DMatrix<f64>) -> Result<Self> {
        Self::alpha_stable(q.nrows(), 2.0, q)
    }

    pub fn custom(
        dim: usize,
        alpha: f64,
        q: DMatrix<f64>,
        symbol: RadialTable,
        envelope: Option<RadialTable>,
    ) -> Result<Self> {
        if (symbol.values[0] - 1.0).abs() > 1e-12 {
            return Err(Error::config("noise.table", "symbol must equal 1 at the origin"));
        }
        if symbol.values.iter().any(|v| v.abs() > 1.0 + 1e-12) {
            return Err(Error::config("noise.table", "symbol values must lie in [-1, 1]"));
        }
        if let Some(env) = &envelope {
            if env.values.windows(2).any(|w| w[1] > w[0]) || env.values.iter().any(|&v| v < 0.0) {
                return Err(Error::config(
                    "noise.envelope",
                    "envelope must be nonnegative and nonincreasing",
                ));
            }
        }
        Self::build(dim, alpha, q, KernelKind::Custom { symbol, envelope })
    }

    fn build(dim: usize, alpha: f64, q: DMatrix<f64>, kind: KernelKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("noise.dim", "dimension must be at least 1"));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::config("noise.alpha", format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if q.nrows() != dim || q.ncols() != dim {
            return Err(Error::config("noise.q", format!("Q must be {dim}x{dim}")));
        }
        if (&q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
            return Err(Error::config("noise.q", "Q must be symmetric"));
        }
        let q_min_eig = q.clone().symmetric_eigen().eigenvalues.min();
        if !(q_min_eig > 0.0) {
            return Err(Error::config("noise.q", "Q must be positive definite"));
        }
        Ok(NoiseKernel {
            dim,
            alpha,
            q,
            q_min_eig,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn is_alpha_stable(&self) -> bool {
        matches!(self.kind, KernelKind::AlphaStable)
    }

    /// Smallest eigenvalue of `Q`.
    pub fn q_min_eigenvalue(&self) -> f64 {
        self.q_min_eig
    }

    /// `xi^T Q xi`.
    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += xi[i] * self.q[(i, j)] * xi[j];
            }
        }
        s.max(0.0)
    }

    /// `g^(xi)`.
    pub fn symbol_at(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            KernelKind::AlphaStable => (-self.quadratic_form(xi).powf(self.alpha / 2.0)).exp(),
            KernelKind::Custom { symbol, .. } => symbol.eval(self.quadratic_form(xi).sqrt()),
        }
    }

    /// `-ln |g^(xi)|`, `+inf` where the symbol vanishes.
    pub fn neg_log_symbol(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            KernelKind::AlphaStable => self.quadratic_form(xi).powf(self.alpha / 2.0),
            KernelKind::Custom { .. } => -self.symbol_at(xi).abs().ln(),
        }
    }

    /// `g^(eps k)`, exactly 1 for `eps = 0`.
    pub fn eigenvalue_on_mode(&self, eps: f64, k: &[i64]) -> f64 {
        if eps == 0.0 {
            return 1.0;
        }
        let xi: Vec<f64> = k.iter().map(|&c| eps * c as f64).collect();
        self.symbol_at(&xi)
    }

    /// Upper bound for `sup |g^(xi)|` over `|xi|_2 >= r`.
    pub fn tail_envelope(&self, r: f64) -> Option<f64> {
        match &self.kind {
            KernelKind::AlphaStable => {
                Some((-(self.q_min_eig * r * r).powf(self.alpha / 2.0)).exp())
            }
            KernelKind::Custom { envelope, .. } => envelope.as_ref().map(|e| e.eval(r)),
        }
    }

    /// `||G_eps|| = sup_{k != 0} |g^(eps k)|` by a certified shell search.
    pub fn noise_norm(&self, eps: f64, policy: SearchPolicy) -> Result<NoiseNorm> {
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("noise_norm needs eps > 0, got {eps}")));
        }
        if self.is_alpha_stable() {
            // minimize Q(k); any k outside the box of radius R has Q(k) > lambda_min R^2
            let lam = self.q_min_eig * (1.0 - 1e-12);
            let mut best = (f64::INFINITY, vec![]);
            let (mut inner, mut outer) = (0i64, 1i64);
            loop {
                for k in shell(self.dim, inner, outer) {
                    let kf: Vec<f64> = k.iter().map(|&c| c as f64).collect();
                    let v = self.quadratic_form(&kf);
                    if v < best.0 {
                        best = (v, k);
                    }
                }
                if lam * (outer as f64).powi(2) >= best.0 {
                    break;
                }
                if outer >= policy.max_radius {
                    return Err(Error::Certification(format!(
                        "shortest lattice vector search exceeded radius {}",
                        policy.max_radius
                    )));
                }
                inner = outer;
                outer *= 2;
            }
            let log_value = -eps.powf(self.alpha) * best.0.powf(self.alpha / 2.0);
            return Ok(NoiseNorm {
                value: log_value.exp(),
                log_value,
                argmax: best.1,
            });
        }
        if self.tail_envelope(0.0).is_none() {
            return Err(Error::config(
                "noise.envelope",
                "a custom symbol needs a decay envelope to certify the lattice supremum",
            ));
        }
        let mut best = (-1.0f64, vec![]);
        let (mut inner, mut outer) = (0i64, 1i64);
        loop {
            for k in shell(self.dim, inner, outer) {
                let v = self.eigenvalue_on_mode(eps, &k).abs();
                if v > best.0 {
                    best = (v, k);
                }
            }
            if self.tail_envelope(eps * outer as f64).unwrap() <= best.0 {
                break;
            }
            if outer >= policy.max_radius {
                return Err(Error::Certification(format!(
                    "envelope stays above the best value {} up to radius {}",
                    best.0, policy.max_radius
                )));
            }
            inner = outer;
            outer *= 2;
        }
        Ok(NoiseNorm {
            value: best.0,
            log_value: best.0.ln(),
            argmax: best.1,
        })
    }

    /// Per-mode eigenvalues over a grid, in enumeration order.
    pub fn diagonal(&self, eps: f64, grid: &crate::fourier::TruncatedGrid) -> Vec<f64> {
        grid.modes().map(|k| self.eigenvalue_on_mode(eps, &k)).collect()
    }

    pub fn apply_noise(&self, eps: f64, f: &FourierVector) -> Result<FourierVector> {
        self.check_dim(f.grid().dim())?;
        Ok(f.map_modes(|k, c| c * self.eigenvalue_on_mode(eps, k)))
    }

    /// `||G_eps f - f||`.
    pub fn smoothing_defect(&self, eps: f64, f: &FourierVector) -> Result<f64> {
        self.check_dim(f.grid().dim())?;
        let s: f64 = f
            .support()
            .iter()
            .map(|(k, c)| (1.0 - self.eigenvalue_on_mode(eps, k)).powi(2) * c.norm_sqr())
            .sum();
        Ok(s.sqrt())
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::Dimension(format!("kernel of dimension {} on a {d}-dimensional grid", self.dim)));
        }
        Ok(())
    }

    /// Spatial covariance of the Gaussian kernel, `Q / (2 pi^2)`.
    fn gaussian_covariance(&self) -> Option<DMatrix<f64>> {
        (self.is_alpha_stable() && self.alpha == 2.0).then(|| &self.q / (2.0 * PI * PI))
    }

    /// `M_p = int |x|^p g(x) dx`, closed form where available.
    pub fn moment(&self, p: f64) -> Result<MomentEstimate> {
        check_moment_order(p)?;
        if p == 0.0 {
            return Ok(MomentEstimate { alpha: p, value: 1.0, method: MomentMethod::Analytic });
        }
        if let Some(cov) = self.gaussian_covariance() {
            let d = self.dim as f64;
            if p == 2.0 {
                return Ok(MomentEstimate { alpha: p, value: cov.trace(), method: MomentMethod::Analytic });
            }
            let diag = cov[(0, 0)];
            if (&cov - DMatrix::identity(self.dim, self.dim) * diag).amax() <= 1e-15 * diag {
                // |X| = sigma * chi_d
                let value = diag.powf(p / 2.0) * 2f64.powf(p / 2.0) * gamma((d + p) / 2.0) / gamma(d / 2.0);
                return Ok(MomentEstimate { alpha: p, value, method: MomentMethod::Analytic });
            }
        }
        self.moment_quadrature(p)
    }

    /// `M_p` by numerical quadrature: over the spatial density for Gaussian
    /// kernels in `d <= 2`, over the symbol for one-dimensional kernels.
    pub fn moment_quadrature(&self, p: f64) -> Result<MomentEstimate> {
        check_moment_order(p)?;
        if p == 0.0 {
            return Ok(MomentEstimate { alpha: p, value: 1.0, method: MomentMethod::Analytic });
        }
        if let Some(cov) = self.gaussian_covariance() {
            if self.dim <= 2 {
                return Ok(MomentEstimate {
                    alpha: p,
                    value: gaussian_moment_quadrature(&cov, p)?,
                    method: MomentMethod::Quadrature,
                });
            }
        }
        if self.dim == 1 {
            return self.moment_from_symbol(p);
        }
        Err(Error::Unsupported(format!(
            "moment of order {p} for this {}-dimensional kernel",
            self.dim
        )))
    }

    /// One-dimensional moments from the characteristic function:
    /// `E|X|^p = (2/pi) Gamma(p+1) sin(pi p/2) int_0^inf (1 - phi(t)) t^(-p-1) dt`
    /// with `phi(t) = g^(t / 2 pi)`, valid for `0 < p < 2`.
    fn moment_from_symbol(&self, p: f64) -> Result<MomentEstimate> {
        if p >= 2.0 {
            return Err(Error::Unsupported("second moment from a non-Gaussian symbol".into()));
        }
        let q = self.q[(0, 0)];
        let (t_lo, t_hi, left_tail, right_tail);
        match &self.kind {
            KernelKind::AlphaStable => {
                if p >= self.alpha {
                    return Err(Error::Invalid(format!(
                        "moment of order {p} diverges for an alpha-stable kernel with alpha = {}",
                        self.alpha
                    )));
                }
                // 1 - phi(t) = 1 - exp(-c t^alpha)
                let c = (q / (4.0 * PI * PI)).powf(self.alpha / 2.0);
                t_lo = (1e-10 / c).powf(1.0 / self.alpha);
                t_hi = (60.0 / c).powf(1.0 / self.alpha);
                left_tail = c * t_lo.powf(self.alpha - p) / (self.alpha - p);
                right_tail = t_hi.powf(-p) / p;
            }
            KernelKind::Custom { symbol, .. } => {
                if p >= 1.0 {
                    return Err(Error::Invalid(format!(
                        "moment of order {p} diverges for a piecewise-linear symbol"
                    )));
                }
                let scale = 2.0 * PI / q.sqrt();
                let slope = (1.0 - symbol.values[1]) / symbol.radii[1];
                t_lo = symbol.radii[1] * scale * 1e-6;
                t_hi = symbol.radii[symbol.radii.len() - 1] * scale;
                left_tail = slope / scale * t_lo.powf(1.0 - p) / (1.0 - p);
                right_tail = (1.0 - symbol.values[symbol.values.len() - 1]) * t_hi.powf(-p) / p;
            }
        }
        let integrand = |s: f64| {
            let t = s.exp();
            (1.0 - self.symbol_at(&[t / (2.0 * PI)])) * (-p * s).exp()
        };
        let body = adaptive_simpson(&integrand, t_lo.ln(), t_hi.ln(), 1e-13);
        let pref = 2.0 / PI * gamma(p + 1.0) * (PI * p / 2.0).sin();
        Ok(MomentEstimate {
            alpha: p,
            value: pref * (body + left_tail + right_tail),
            method: MomentMethod::Quadrature,
        })
    }

    /// Checks `1 - g^(xi) <= C_alpha M_alpha |xi|^alpha` at every sample.
    pub fn moment_fourier_check(&self, alpha: f64, samples: &[Vec<f64>], moment: MomentEstimate) -> Result<MomentCheck> {
        let c_alpha = cosine_bound_constant(alpha);
        let mut holds = true;
        let mut entries = Vec::with_capacity(samples.len());
        for xi in samples {
            self.check_dim(xi.len())?;
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            let defect = 1.0 - self.symbol_at(xi);
            let bound = c_alpha * moment.value * r.powf(alpha);
            if defect > bound * (1.0 + 1e-12) + 1e-15 || defect < -1e-15 {
                holds = false;
            }
            entries.push(MomentCheckEntry { xi: xi.clone(), defect, bound });
        }
        let mut small_xi_ratios = Vec::new();
        if alpha == 2.0 {
            let mut radii: Vec<(f64, &Vec<f64>)> = samples
                .iter()
                .map(|x| (x.iter().map(|v| v * v).sum::<f64>().sqrt(), x))
                .filter(|(r, _)| *r > 0.0)
                .collect();
            radii.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (r, xi) in radii.into_iter().take(5) {
                let defect = -(-self.neg_log_symbol(xi)).exp_m1();
                small_xi_ratios.push((r, defect / (r * r)));
            }
        }
        Ok(MomentCheck { alpha, c_alpha, moment, entries, small_xi_ratios, holds })
    }

    /// `int g^(xi)^2 d xi`.
    pub fn symbol_l2_integral(&self) -> Result<f64> {
        let d = self.dim as f64;
        let det = self.q.determinant();
        let sphere = 2.0 * PI.powf(d / 2.0) / gamma(d / 2.0);
        match &self.kind {
            KernelKind::AlphaStable => {
                let radial = gamma(d / self.alpha) / (self.alpha * 2f64.powf(d / self.alpha));
                Ok(sphere * radial / det.sqrt())
            }
            KernelKind::Custom { symbol, .. } => {
                if symbol.values[symbol.values.len() - 1] != 0.0 {
                    return Err(Error::Invalid("symbol is not square integrable (nonzero tail)".into()));
                }
                let r_max = symbol.radii[symbol.radii.len() - 1];
                let f = |r: f64| r.powf(d - 1.0) * symbol.eval(r).powi(2);
                let mut total = 0.0;
                for w in symbol.radii.windows(2) {
                    total += adaptive_simpson(&f, w[0], w[1], 1e-14 * r_max);
                }
                Ok(sphere * total / det.sqrt())
            }
        }
    }

    /// `eps^d sum_{k in Z^d} g^(eps k)^2` against `int g^2`.
    pub fn poisson_sum_check(&self, eps_grid: &[f64]) -> Result<PoissonReport> {
        let integral = self.symbol_l2_integral()?;
        let mut entries = Vec::with_capacity(eps_grid.len());
        for &eps in eps_grid {
            if !(eps > 0.0) {
                return Err(Error::Invalid(format!("Poisson check needs eps > 0, got {eps}")));
            }
            // radius beyond which every term is below e^-80 (or exactly zero)
            let reach = match &self.kind {
                KernelKind::AlphaStable => (40.0f64.powf(2.0 / self.alpha) / self.q_min_eig).sqrt() / eps,
                KernelKind::Custom { symbol, .. } => {
                    symbol.radii[symbol.radii.len() - 1] / (self.q_min_eig.sqrt() * eps)
                }
            };
            let radius = reach.ceil() as i64 + 1;
            let mut terms: Vec<f64> = shell(self.dim, 0, radius)
                .map(|k| self.eigenvalue_on_mode(eps, &k).powi(2))
                .collect();
            terms.push(1.0);
            terms.sort_by(f64::total_cmp);
            let mut acc = KahanSum::default();
            for t in terms {
                acc.add(t);
            }
            let lattice_sum = eps.powi(self.dim as i32) * acc.value();
            entries.push(PoissonEntry { eps, lattice_sum, discrepancy: (lattice_sum - integral).abs() });
        }
        let floor = 64.0 * f64::EPSILON * integral;
        let mut sorted: Vec<&PoissonEntry> = entries.iter().collect();
        sorted.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        let monotone = sorted
            .windows(2)
            .all(|w| w[1].discrepancy <= w[0].discrepancy || w[1].discrepancy <= floor);
        Ok(PoissonReport { integral, entries, floor, monotone })
    }
}

fn check_moment_order(p: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&p) {
        return Err(Error::Invalid(format!("moment order must lie in [0, 2], got {p}")));
    }
    Ok(())
}

fn gaussian_moment_quadrature(cov: &DMatrix<f64>, p: f64) -> Result<f64> {
    let d = cov.nrows();
    let inv = cov
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Invalid("singular covariance".into()))?;
    let det = cov.determinant();
    let sigma_max = cov.clone().symmetric_eigen().eigenvalues.max().sqrt();
    // the Gaussian tail beyond 12 sigma is far below 1e-12 even with |x|^2 weight
    let l = 12.0 * sigma_max;
    let norm = 1.0 / ((2.0 * PI).powi(d as i32) * det).sqrt();
    if d == 1 {
        let f = |x: f64| x.abs().powf(p) * norm * (-0.5 * inv[(0, 0)] * x * x).exp();
        return Ok(2.0 * adaptive_simpson(&f, 0.0, l, 1e-14));
    }
    let tol = 1e-13;
    let outer = |x: f64| {
        let inner = |y: f64| {
            let r2 = x * x + y * y;
            let qf = inv[(0, 0)] * x * x + 2.0 * inv[(0, 1)] * x * y + inv[(1, 1)] * y * y;
            r2.powf(p / 2.0) * norm * (-0.5 * qf).exp()
        };
        adaptive_simpson(&inner, -l, l, tol)
    };
    Ok(adaptive_simpson(&outer, -l, l, tol))
}
