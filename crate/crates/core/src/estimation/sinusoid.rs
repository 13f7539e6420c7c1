//! y = offset + A·e^{−γt}·cos(2πft + φ), with the frequency seeded from a
//! floating-mean weighted periodogram.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::lsq::minimize;
use super::{check_points, unzip, wrap_phase, DataPoint, Estimate, FitError, Lifetime};

const OVERSAMPLE: f64 = 5.0;
const MAX_GRID: usize = 400_000;
const CANDIDATES: usize = 5;
const SIGNIFICANCE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub offset: Estimate,
    /// ≥ 0; value at t = 0 for damped fits.
    pub amplitude: Estimate,
    /// Hz, ≥ 0.
    pub frequency: Estimate,
    /// rad, in [0, 2π).
    pub phase: Estimate,
    /// Envelope rate γ (1/s); `None` for undamped fits.
    pub damping_rate: Option<Estimate>,
    pub damping_time: Option<Lifetime>,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    /// Periodogram peak over median power.
    pub peak_ratio: f64,
}

fn model(t: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let rate = if p.len() > 4 { p[4] } else { 0.0 };
    let e = (-rate * t).exp();
    let (s, c) = (TAU * p[2] * t + p[3]).sin_cos();
    g[0] = 1.0;
    g[1] = e * c;
    g[2] = -p[1] * e * s * TAU * t;
    g[3] = -p[1] * e * s;
    if p.len() > 4 {
        g[4] = -t * p[1] * e * c;
    }
    p[0] + p[1] * e * c
}

/// Weighted fit of y ≈ o + a·cos + b·sin at one frequency; returns
/// (χ² reduction relative to a constant, a, b).
fn single_frequency(xs: &[f64], ys: &[f64], ws: &[f64], f: f64) -> (f64, f64, f64) {
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut v = nalgebra::Vector3::<f64>::zeros();
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        let (s, c) = (TAU * f * x).sin_cos();
        let basis = nalgebra::Vector3::new(1.0, c, s);
        m += w * basis * basis.transpose();
        v += w * y * basis;
    }
    match m.cholesky() {
        Some(ch) => {
            let sol = ch.solve(&v);
            // χ²_const − χ²_fit = solᵀ v − (Σwy)²/Σw
            let sw = m[(0, 0)];
            let reduction = sol.dot(&v) - v[0] * v[0] / sw;
            (reduction.max(0.0), sol[1], sol[2])
        }
        None => (0.0, 0.0, 0.0),
    }
}

/// (frequency, power) on a uniform grid from 1/(5·span) to the Nyquist
/// frequency of the finest sample spacing.
pub fn periodogram(points: &[DataPoint]) -> Vec<(f64, f64)> {
    let (xs, ys, ss) = unzip(points);
    let ws: Vec<f64> = ss.iter().map(|s| 1.0 / (s * s)).collect();
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let span = sorted.last().copied().unwrap_or(0.0) - sorted.first().copied().unwrap_or(0.0);
    let min_dt = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 1e-12 * span)
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0 && min_dt.is_finite()) {
        return Vec::new();
    }
    let f_max = 0.5 / min_dt;
    let mut df = 1.0 / (OVERSAMPLE * span);
    if f_max / df > MAX_GRID as f64 {
        df = f_max / MAX_GRID as f64;
    }
    let n = (f_max / df).floor() as usize;
    (1..=n)
        .map(|k| {
            let f = k as f64 * df;
            (f, single_frequency(&xs, &ys, &ws, f).0)
        })
        .collect()
}

fn local_maxima(spectrum: &[(f64, f64)]) -> Vec<usize> {
    let mut peaks: Vec<usize> = (0..spectrum.len())
        .filter(|&i| {
            let p = spectrum[i].1;
            (i == 0 || spectrum[i - 1].1 <= p) && (i + 1 == spectrum.len() || spectrum[i + 1].1 < p)
        })
        .collect();
    peaks.sort_by(|&a, &b| spectrum[b].1.total_cmp(&spectrum[a].1));
    peaks.truncate(CANDIDATES);
    peaks
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn fit_sinusoid(points: &[DataPoint], damped: bool) -> Result<SinusoidFit, FitError> {
    check_points(points, 8, "sinusoid fit")?;
    let (xs, ys, ss) = unzip(points);
    let ws: Vec<f64> = ss.iter().map(|s| 1.0 / (s * s)).collect();
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(FitError::NoOscillation { peak_ratio: 0.0 });
    }
    let spectrum = periodogram(points);
    if spectrum.is_empty() {
        return Err(FitError::InsufficientData("sinusoid fit needs distinct sample times".into()));
    }
    let med = median(spectrum.iter().map(|s| s.1).collect());
    let peaks = local_maxima(&spectrum);
    let top = spectrum[peaks[0]];
    let peak_ratio = if med > 0.0 { top.1 / med } else { f64::INFINITY };
    if !(peak_ratio >= SIGNIFICANCE) {
        return Err(FitError::NoOscillation { peak_ratio });
    }
    let t_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = t_max - t_min;
    if span * top.0 < 1.0 {
        return Err(FitError::InsufficientData(format!(
            "data span {span} s covers less than one period at {} Hz",
            top.0
        )));
    }

    let inf = (f64::NEG_INFINITY, f64::INFINITY);
    let freq_bounds = (0.0, f64::INFINITY);
    let mut best: Option<super::lsq::LsqOutcome> = None;
    for &i in &peaks {
        let f0 = spectrum[i].0;
        let (_, a, b) = single_frequency(&xs, &ys, &ws, f0);
        let offset = {
            let sw: f64 = ws.iter().sum();
            ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw
        };
        // a·cos + b·sin = A·cos(θ + φ) with A = √(a²+b²), φ = atan2(−b, a)
        let p0 = [offset, a.hypot(b), f0, (-b).atan2(a)];
        let undamped = minimize(model, &xs, &ys, &ss, &p0, &[inf, inf, freq_bounds, inf]);
        let candidate = if damped {
            let p = [undamped.params[0], undamped.params[1], undamped.params[2], undamped.params[3], 0.0];
            minimize(model, &xs, &ys, &ss, &p, &[inf, inf, freq_bounds, inf, inf])
        } else {
            undamped
        };
        if candidate.converged && best.as_ref().is_none_or(|b| candidate.chi2 < b.chi2) {
            best = Some(candidate);
        }
    }
    let Some(out) = best else {
        return Err(FitError::NotConverged { best: vec![top.0], iterations: super::lsq::MAX_ITERATIONS });
    };

    let mut p = out.params.clone();
    let mut cov = out.covariance.clone();
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[3] += PI;
        for j in 0..p.len() {
            if j != 1 {
                cov[(1, j)] = -cov[(1, j)];
                cov[(j, 1)] = -cov[(j, 1)];
            }
        }
    }
    let sd = |j: usize| cov[(j, j)].max(0.0).sqrt();
    let (damping_rate, damping_time) = if damped {
        let rate = Estimate::new(p[4], sd(4));
        (Some(rate), Some(Lifetime::from_rate(rate, t_max.abs().max(span))))
    } else {
        (None, None)
    };
    Ok(SinusoidFit {
        offset: Estimate::new(p[0], sd(0)),
        amplitude: Estimate::new(p[1], sd(1)),
        frequency: Estimate::new(p[2], sd(2)),
        phase: Estimate::new(wrap_phase(p[3]), sd(3)),
        damping_rate,
        damping_time,
        chi2: out.chi2,
        dof: points.len().saturating_sub(p.len()),
        iterations: out.iterations,
        peak_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(ts: &[f64], f: f64, amp: f64, phase: f64, rate: f64) -> Vec<DataPoint> {
        ts.iter()
            .map(|&t| DataPoint::new(t, 0.5 + amp * (-rate * t).exp() * (TAU * f * t + phase).cos(), 0.01))
            .collect()
    }

    #[test]
    fn exact_125_hz() {
        let ts: Vec<f64> = (0..60).map(|i| i as f64 * 5e-4).collect();
        let fit = fit_sinusoid(&series(&ts, 125.0, 0.5, 0.3, 0.0), false).unwrap();
        assert!((fit.frequency.value - 125.0).abs() < 1e-6 * 125.0);
        assert!((fit.amplitude.value - 0.5).abs() < 1e-6);
        assert!((fit.phase.value - 0.3).abs() < 1e-6);
        assert!((fit.offset.value - 0.5).abs() < 1e-6);
    }

    #[test]
    fn damped_windows_round_trip() {
        // short windows at widely separated delays
        let mut ts = Vec::new();
        for start in [0.0, 0.3, 1.0, 2.0] {
            ts.extend((0..48).map(|i| start + i as f64 * 5e-4));
        }
        let fit = fit_sinusoid(&series(&ts, 125.0, -0.45, 0.0, 1.0 / 7.3), true).unwrap();
        assert!((fit.frequency.value - 125.0).abs() < 1e-6 * 125.0);
        let tau = fit.damping_time.unwrap().finite().unwrap();
        assert!((tau.value - 7.3).abs() < 1e-5, "{tau:?}");
        assert!((fit.amplitude.value - 0.45).abs() < 1e-6);
        assert!((fit.phase.value - PI).abs() < 1e-6);
    }

    #[test]
    fn constant_series_has_no_oscillation() {
        let pts: Vec<DataPoint> = (0..20).map(|i| DataPoint::new(i as f64, 0.3, 0.1)).collect();
        assert!(matches!(fit_sinusoid(&pts, false), Err(FitError::NoOscillation { .. })));
    }

    #[test]
    fn too_few_points() {
        let ts: Vec<f64> = (0..7).map(|i| i as f64 * 1e-3).collect();
        assert!(matches!(
            fit_sinusoid(&series(&ts, 125.0, 0.5, 0.0, 0.0), false),
            Err(FitError::InsufficientData(_))
        ));
    }

    #[test]
    fn periodogram_peaks_at_signal() {
        let ts: Vec<f64> = (0..100).map(|i| i as f64 * 1e-3).collect();
        let spec = periodogram(&series(&ts, 60.0, 0.3, 1.0, 0.0));
        let peak = spec.iter().cloned().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!((peak.0 - 60.0).abs() < 2.0, "{peak:?}");
    }
}
