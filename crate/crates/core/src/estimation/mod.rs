//! Fits and derived quantities: Ramsey fringes, contrast decay, parity
//! oscillations, linear extrapolation and memory error.
//!
//! All fits are weighted least squares on [`DataPoint`]s and report 1σ
//! uncertainties from the unscaled covariance (JᵀWJ)⁻¹, i.e. they trust the
//! supplied σ.

mod ac_zeeman;
mod decay;
mod linear;
mod lsq;
mod phase_scan;
mod sinusoid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ac_zeeman::{ac_zeeman_coverage, AcZeemanCoverage, AcZeemanScenario};
pub use decay::{bootstrap_decay, fit_exponential_decay, DecayFit};
pub use linear::{fit_linear_intercept, fit_quadratic, LinearFit, QuadraticFit};
pub use phase_scan::{fit_phase_curve, fit_phase_scan, phase_scan_points, PhaseScanFit};
pub use sinusoid::{fit_sinusoid, periodogram, SinusoidFit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fit domain error: {0}")]
    Domain(String),
    #[error("no significant oscillation (peak/median power {peak_ratio:.2} < 3)")]
    NoOscillation { peak_ratio: f64 },
    #[error("no convergence after {iterations} iterations; best parameters {best:?}")]
    NotConverged { best: Vec<f64>, iterations: usize },
}

/// One weighted observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl DataPoint {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }
}

/// Value with 1σ uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn covers(&self, truth: f64) -> bool {
        (self.value - truth).abs() <= self.sigma
    }
}

/// Decay or damping time; `Unbounded` when the data show no decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifetime {
    Finite(Estimate),
    Unbounded,
}

impl Lifetime {
    pub fn finite(&self) -> Option<Estimate> {
        match *self {
            Self::Finite(e) => Some(e),
            Self::Unbounded => None,
        }
    }

    /// τ = 1/γ with σ_τ = σ_γ/γ².
    pub(crate) fn from_rate(rate: Estimate, scale: f64) -> Self {
        if rate.value * scale <= 1e-12 {
            Self::Unbounded
        } else {
            Self::Finite(Estimate::new(1.0 / rate.value, rate.sigma / (rate.value * rate.value)))
        }
    }
}

/// Binomial standard error using the Agresti–Coull (z = 2) adjusted
/// proportion p̃ = (k+2)/(n+4), nonzero even for k ∈ {0, n}.
pub fn binomial_sigma(successes: u32, trials: u32) -> f64 {
    let n = trials as f64 + 4.0;
    let p = (successes as f64 + 2.0) / n;
    (p * (1.0 - p) / n).sqrt()
}

/// p = 1 − e^{−t/τ} for a memory with exponential coherence decay.
///
/// # Panics
/// If `tau <= 0` or `t < 0`.
pub fn memory_error_probability(tau: f64, t: f64) -> f64 {
    assert!(tau > 0.0, "tau must be positive");
    assert!(t >= 0.0, "t must be nonnegative");
    -(-t / tau).exp_m1()
}

fn check_points(points: &[DataPoint], min: usize, what: &str) -> Result<(), FitError> {
    if points.len() < min {
        return Err(FitError::InsufficientData(format!(
            "{what} needs at least {min} points, got {}",
            points.len()
        )));
    }
    for p in points {
        if !(p.x.is_finite() && p.y.is_finite() && p.sigma.is_finite() && p.sigma > 0.0) {
            return Err(FitError::Domain(format!("non-finite value or nonpositive sigma in {p:?}")));
        }
    }
    Ok(())
}

fn unzip(points: &[DataPoint]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let xs = points.iter().map(|p| p.x).collect();
    let ys = points.iter().map(|p| p.y).collect();
    let ss = points.iter().map(|p| p.sigma).collect();
    (xs, ys, ss)
}

fn distinct_count(xs: &[f64]) -> usize {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

fn wrap_phase(phi: f64) -> f64 {
    phi.rem_euclid(std::f64::consts::TAU)
}
