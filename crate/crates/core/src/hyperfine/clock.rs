//! Field-independent (clock) operating points.

use super::sensitivity::{stencil_slope, SensitivityStatus};
use super::{
    all_transitions, closed_form, field_sensitivity, HyperfineConstants, HyperfineError,
    Transition, CLOCK_ZERO_TOLERANCE,
};

/// Bracket width at which the root search stops (T).
const FIELD_TOLERANCE: f64 = 1e-9;
/// Stencil step used by the root search (T). Larger than the default step so
/// the first-derivative round-off stays below the clock zero tolerance.
pub const ROOT_STENCIL_STEP: f64 = 1e-6;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockStatus {
    Converged,
    /// The bracket reached the field tolerance but |d1| is still above the
    /// zero tolerance, within the stencil round-off bound.
    NoiseFloor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockField {
    pub field: f64,
    /// Hz/T at `field`
    pub d1: f64,
    pub d1_noise: f64,
    pub iterations: usize,
    pub status: ClockStatus,
}

/// A clock point found by scanning; `transition.lower` is the lower-energy level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockPoint {
    pub transition: Transition,
    pub field: f64,
    pub f0: f64,
    pub d1: f64,
    pub d2: f64,
    pub status: ClockStatus,
}

/// Root of the first field derivative on `bracket` by a bisection/secant hybrid.
///
/// Each step tries an Illinois-weighted secant point and falls back to
/// bisection whenever the secant lands outside the middle of the bracket or the
/// bracket failed to halve over the previous two steps.
pub fn find_clock_field(
    constants: &HyperfineConstants,
    transition: Transition,
    bracket: (f64, f64),
) -> Result<ClockField, HyperfineError> {
    constants.validate()?;
    constants.check_label(transition.lower)?;
    constants.check_label(transition.upper)?;
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(HyperfineError::NoRoot { lo, hi });
    }
    let slope = |b: f64| stencil_slope(constants, transition, b, ROOT_STENCIL_STEP);
    let mut g_lo = slope(lo);
    let mut g_hi = slope(hi);
    if g_lo == 0.0 {
        return finish(constants, transition, lo, 0);
    }
    if g_hi == 0.0 {
        return finish(constants, transition, hi, 0);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(HyperfineError::NoRoot { lo, hi });
    }

    let mut iterations = 0;
    let mut widths = [f64::INFINITY; 2];
    // Illinois: which end was retained last step, to halve its weight
    let mut retained: i8 = 0;
    let mut best = if g_lo.abs() < g_hi.abs() { (lo, g_lo.abs()) } else { (hi, g_hi.abs()) };
    while iterations < MAX_ITERATIONS {
        let width = hi - lo;
        let done = width <= FIELD_TOLERANCE && best.1 <= 0.5 * CLOCK_ZERO_TOLERANCE;
        let exhausted = width <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs());
        if done || exhausted {
            break;
        }
        iterations += 1;
        let mut x = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let stalled = width > 0.5 * widths[0];
        let margin = 0.05 * width;
        if !x.is_finite() || x <= lo + margin || x >= hi - margin || stalled {
            x = 0.5 * (lo + hi);
        }
        let gx = slope(x);
        if gx.abs() < best.1 || (width <= FIELD_TOLERANCE && gx.abs() == best.1) {
            best = (x, gx.abs());
        }
        if gx == 0.0 {
            break;
        }
        if gx.signum() == g_lo.signum() {
            lo = x;
            g_lo = gx;
            if retained == 1 {
                g_hi *= 0.5;
            }
            retained = 1;
        } else {
            hi = x;
            g_hi = gx;
            if retained == -1 {
                g_lo *= 0.5;
            }
            retained = -1;
        }
        widths = [widths[1], width];
    }
    finish(constants, transition, best.0, iterations)
}

fn finish(
    c: &HyperfineConstants,
    t: Transition,
    field: f64,
    iterations: usize,
) -> Result<ClockField, HyperfineError> {
    let s = field_sensitivity(c, t, field, ROOT_STENCIL_STEP)?;
    let status = if s.d1.abs() <= CLOCK_ZERO_TOLERANCE
        && s.status == SensitivityStatus::Ok
    {
        ClockStatus::Converged
    } else {
        ClockStatus::NoiseFloor
    };
    Ok(ClockField { field, d1: s.d1, d1_noise: s.d1_noise, iterations, status })
}

/// Scan every level pair for sign changes of d1 on a grid over `range` and
/// refine each with [`find_clock_field`]. Sorted by field.
pub fn enumerate_clock_fields(
    constants: &HyperfineConstants,
    range: (f64, f64),
    grid_step: f64,
) -> Result<Vec<ClockPoint>, HyperfineError> {
    constants.validate()?;
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(HyperfineError::InvalidStep { step: grid_step, field: range.0 });
    }
    let (lo, hi) = range;
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    let n = ((hi - lo) / grid_step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| (lo + k as f64 * grid_step).min(hi)).collect();

    let mut points = Vec::new();
    for t in all_transitions(constants) {
        let slopes: Vec<f64> =
            grid.iter().map(|&b| stencil_slope(constants, t, b, ROOT_STENCIL_STEP)).collect();
        let mut last_root = f64::NEG_INFINITY;
        for k in 0..grid.len() - 1 {
            let (a, b) = (slopes[k], slopes[k + 1]);
            let crosses = a.signum() != b.signum() || b == 0.0;
            if !crosses || grid[k + 1] <= grid[k] {
                continue;
            }
            let root = find_clock_field(constants, t, (grid[k], grid[k + 1]))?;
            if (root.field - last_root).abs() <= 2.0 * FIELD_TOLERANCE {
                continue;
            }
            last_root = root.field;
            points.push(clock_point(constants, t, root)?);
        }
    }
    points.sort_by(|a, b| {
        a.field
            .total_cmp(&b.field)
            .then(a.transition.lower.cmp(&b.transition.lower))
            .then(a.transition.upper.cmp(&b.transition.upper))
    });
    Ok(points)
}

fn clock_point(
    c: &HyperfineConstants,
    t: Transition,
    root: ClockField,
) -> Result<ClockPoint, HyperfineError> {
    let e_lower = closed_form::energy(c, t.lower, root.field);
    let e_upper = closed_form::energy(c, t.upper, root.field);
    let ordered = if e_lower <= e_upper { t } else { t.reversed() };
    let s = field_sensitivity(c, ordered, root.field, ROOT_STENCIL_STEP)?;
    Ok(ClockPoint {
        transition: ordered,
        field: root.field,
        f0: s.f0,
        d1: s.d1,
        d2: s.d2,
        status: root.status,
    })
}
