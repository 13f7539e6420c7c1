use super::{closed_form, signed_splitting, HyperfineConstants, HyperfineError, Transition};

/// Default finite-difference step (T).
pub const DEFAULT_STENCIL_STEP: f64 = 1e-7;

/// |d1| below this (Hz/T) counts as a field-independent point.
pub const CLOCK_ZERO_TOLERANCE: f64 = 1.0;

const PRECISION_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityStatus {
    Ok,
    /// Round-off in the stencil exceeds 10⁻³ of the frequency variation it resolves.
    PrecisionWarning,
}

/// Transition frequency and its first two field derivatives at one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSensitivity {
    pub at_field: f64,
    /// Hz
    pub f0: f64,
    /// Hz/T
    pub d1: f64,
    /// Hz/T², the second derivative (not the coefficient of (B − B₀)²)
    pub d2: f64,
    pub step_used: f64,
    /// Round-off bound on `d1` (Hz/T).
    pub d1_noise: f64,
    /// |d1(h) − d1(h/2)|, the Richardson consistency check.
    pub d1_richardson: f64,
    /// |d2(h) − d2(h/2)|
    pub d2_richardson: f64,
    pub status: SensitivityStatus,
}

impl FieldSensitivity {
    /// Sensitivity with given derivatives, for analytic estimates that do not
    /// come from a spectrum.
    pub fn from_coefficients(d1: f64, d2: f64) -> Self {
        Self {
            at_field: 0.0,
            f0: 0.0,
            d1,
            d2,
            step_used: 0.0,
            d1_noise: 0.0,
            d1_richardson: 0.0,
            d2_richardson: 0.0,
            status: SensitivityStatus::Ok,
        }
    }

    /// Coefficient c in Δν ≈ c (B − B₀)², i.e. d2 / 2.
    pub fn quadratic_coefficient(&self) -> f64 {
        0.5 * self.d2
    }

    /// Frequency shift for a field deviation `delta_b` to second order.
    pub fn detuning(&self, delta_b: f64) -> f64 {
        self.d1 * delta_b + 0.5 * self.d2 * delta_b * delta_b
    }
}

/// Derivatives of the signed splitting E(upper) − E(lower).
struct Stencil {
    d1: f64,
    d2: f64,
    relative_noise: f64,
    noise_d1: f64,
}

fn stencil(c: &HyperfineConstants, t: Transition, b: f64, h: f64) -> Stencil {
    let delta = |x: f64| {
        closed_form::energy(c, t.upper, x) - closed_form::energy(c, t.lower, x)
    };
    let fm2 = delta(b - 2.0 * h);
    let fm1 = delta(b - h);
    let f0 = delta(b);
    let fp1 = delta(b + h);
    let fp2 = delta(b + 2.0 * h);
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);

    let scale = closed_form::energy(c, t.upper, b).abs() + closed_form::energy(c, t.lower, b).abs();
    let roundoff = f64::EPSILON * scale;
    let variation = (fp2 - fm2).abs().max((fp2 - 2.0 * f0 + fm2).abs());
    let relative_noise = if variation > 0.0 { roundoff / variation } else { f64::INFINITY };
    Stencil { d1, d2, relative_noise, noise_d1: 1.5 * roundoff / h }
}

/// Five-point central differences of the transition frequency at field `b`.
///
/// `b` is a signed field along the quantization axis so that zero-field
/// clock points can be probed symmetrically.
pub fn field_sensitivity(
    constants: &HyperfineConstants,
    transition: Transition,
    b: f64,
    step: f64,
) -> Result<FieldSensitivity, HyperfineError> {
    if !(step > 0.0 && step.is_finite() && b.is_finite()) {
        return Err(HyperfineError::InvalidStep { step, field: b });
    }
    let splitting = signed_splitting(constants, transition, b)?;
    let sign = if splitting < 0.0 { -1.0 } else { 1.0 };

    let full = stencil(constants, transition, b, step);
    let half = stencil(constants, transition, b, 0.5 * step);
    let status = if full.relative_noise > PRECISION_LIMIT {
        SensitivityStatus::PrecisionWarning
    } else {
        SensitivityStatus::Ok
    };
    Ok(FieldSensitivity {
        at_field: b,
        f0: splitting.abs(),
        d1: sign * full.d1,
        d2: sign * full.d2,
        step_used: step,
        d1_noise: full.noise_d1,
        d1_richardson: (full.d1 - half.d1).abs(),
        d2_richardson: (full.d2 - half.d2).abs(),
        status,
    })
}

/// d/dB of the signed splitting; the root finder works on this so that a
/// level crossing (where |Δ| has a kink) is never mistaken for an extremum.
pub(crate) fn stencil_slope(c: &HyperfineConstants, t: Transition, b: f64, h: f64) -> f64 {
    stencil(c, t, b, h).d1
}
