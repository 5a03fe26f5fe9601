//! Dissipation times, rate fits, pseudospectra, correlations and bounds.

mod bounds;
mod correlation;
mod dissipation;
mod fit;
mod pseudospectrum;

pub use bounds::{bound_entry, bound_report, corr_slope, nln_slope, BoundEntry, BoundOptions, BoundReport, SlopeInputs};
pub use correlation::{
    correlation_series, supexp_bound_check, CorrelationEntry, CorrelationSeries, SupexpEntry, SupexpReport,
};
pub use dissipation::{dissipation_report, dissipation_time, DissipationOptions, DissipationReport, DissipationTime};
pub use fit::{
    decay_fit, line_fit, rate_fit, DecayFit, DecayModel, DoubleExponentialDecay, ExponentialDecay, LineFit,
    LogarithmicFit, PowerDecay, PowerFit, RateFit, RateModel,
};
pub use pseudospectrum::{pseudospectrum_distance, spectral_radius_estimate, PseudospectrumPoint, DEFAULT_ANGLES};
