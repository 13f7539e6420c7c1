//! Stochastic magnetic-field traces.
//!
//! A trace is piecewise constant: sample `i` holds on
//! `[t0 + i·dt, t0 + (i+1)·dt)` and carries the process value at the interval
//! midpoint. Integrating a trace is therefore the midpoint rule.
//!
//! Values are deviations from the nominal field in tesla, except where a
//! caller deliberately builds a spec in other units (see [`NoiseSpec::scaled`]).

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyperfine::FieldSensitivity;
use crate::rng::{substream, StreamRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid sampling grid: duration {duration} s, dt {dt} s")]
    InvalidGrid { duration: f64, dt: f64 },
    #[error("interval [{t_a}, {t_b}] s outside trace support [{start}, {end}] s")]
    OutOfRange { t_a: f64, t_b: f64, start: f64, end: f64 },
}

/// One primitive process. Traces of a spec are the sum of its components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseComponent {
    ConstantOffset { value: f64 },
    /// Value grows as `rate · t` from t = 0.
    LinearDrift { rate: f64 },
    /// Wiener process from zero at t = 0; Var[B(t)] = diffusion · t.
    RandomWalk { diffusion: f64 },
    /// Stationary Ornstein–Uhlenbeck process.
    OrnsteinUhlenbeck { rms: f64, correlation_time_s: f64 },
    Sinusoid { amplitude: f64, frequency_hz: f64, phase_rad: f64 },
    /// Independent Gaussian per sample.
    White { rms: f64 },
}

impl NoiseComponent {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |what: &str| Err(NoiseError::InvalidParameter(what.to_string()));
        match *self {
            Self::ConstantOffset { value } if !value.is_finite() => bad("constant_offset value"),
            Self::LinearDrift { rate } if !rate.is_finite() => bad("linear_drift rate"),
            Self::RandomWalk { diffusion } if !(diffusion >= 0.0 && diffusion.is_finite()) => {
                bad("random_walk diffusion must be finite and >= 0")
            }
            Self::OrnsteinUhlenbeck { rms, correlation_time_s } => {
                if !(rms >= 0.0 && rms.is_finite()) {
                    bad("ornstein_uhlenbeck rms must be finite and >= 0")
                } else if !(correlation_time_s > 0.0 && correlation_time_s.is_finite()) {
                    bad("ornstein_uhlenbeck correlation_time_s must be > 0")
                } else {
                    Ok(())
                }
            }
            Self::Sinusoid { amplitude, frequency_hz, phase_rad } => {
                if !(amplitude >= 0.0 && amplitude.is_finite())
                    || !frequency_hz.is_finite()
                    || !phase_rad.is_finite()
                {
                    bad("sinusoid parameters must be finite with amplitude >= 0")
                } else {
                    Ok(())
                }
            }
            Self::White { rms } if !(rms >= 0.0 && rms.is_finite()) => {
                bad("white rms must be finite and >= 0")
            }
            _ => Ok(()),
        }
    }

    fn scaled(&self, k: f64) -> Self {
        match *self {
            Self::ConstantOffset { value } => Self::ConstantOffset { value: k * value },
            Self::LinearDrift { rate } => Self::LinearDrift { rate: k * rate },
            Self::RandomWalk { diffusion } => Self::RandomWalk { diffusion: k * k * diffusion },
            Self::OrnsteinUhlenbeck { rms, correlation_time_s } => {
                Self::OrnsteinUhlenbeck { rms: k.abs() * rms, correlation_time_s }
            }
            Self::Sinusoid { amplitude, frequency_hz, phase_rad } => Self::Sinusoid {
                amplitude: k.abs() * amplitude,
                frequency_hz,
                phase_rad: if k < 0.0 { phase_rad + PI } else { phase_rad },
            },
            Self::White { rms } => Self::White { rms: k.abs() * rms },
        }
    }

    /// Add this component's realization on `grid` into `out`.
    pub fn accumulate(&self, grid: &TraceGrid, rng: &mut StreamRng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), grid.len);
        let dt = grid.dt;
        let mid = |i: usize| grid.t0 + (i as f64 + 0.5) * dt;
        match *self {
            Self::ConstantOffset { value } => out.iter_mut().for_each(|x| *x += value),
            Self::LinearDrift { rate } => {
                for (i, x) in out.iter_mut().enumerate() {
                    *x += rate * mid(i);
                }
            }
            Self::RandomWalk { diffusion } => {
                let first_var = diffusion * mid(0).max(0.0);
                let mut b = first_var.sqrt() * gauss(rng);
                let step = (diffusion * dt).sqrt();
                for (i, x) in out.iter_mut().enumerate() {
                    if i > 0 {
                        b += step * gauss(rng);
                    }
                    *x += b;
                }
            }
            Self::OrnsteinUhlenbeck { rms, correlation_time_s } => {
                let decay = (-dt / correlation_time_s).exp();
                let kick = rms * (1.0 - decay * decay).sqrt();
                let mut b = rms * gauss(rng);
                for (i, x) in out.iter_mut().enumerate() {
                    if i > 0 {
                        b = decay * b + kick * gauss(rng);
                    }
                    *x += b;
                }
            }
            Self::Sinusoid { amplitude, frequency_hz, phase_rad } => {
                for (i, x) in out.iter_mut().enumerate() {
                    *x += amplitude * (2.0 * PI * frequency_hz * mid(i) + phase_rad).sin();
                }
            }
            Self::White { rms } => out.iter_mut().for_each(|x| *x += rms * gauss(rng)),
        }
    }
}

fn gauss(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Superposition of primitive processes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub components: Vec<NoiseComponent>,
}

impl NoiseSpec {
    pub fn new(components: Vec<NoiseComponent>) -> Self {
        Self { components }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        self.components.iter().try_for_each(NoiseComponent::validate)
    }

    /// Same processes with every trace multiplied by `k` (e.g. to convert a
    /// frequency-unit spec to tesla).
    pub fn scaled(&self, k: f64) -> Self {
        Self { components: self.components.iter().map(|c| c.scaled(k)).collect() }
    }

    pub fn is_deterministic(&self) -> bool {
        self.components.iter().all(|c| {
            matches!(
                c,
                NoiseComponent::ConstantOffset { .. }
                    | NoiseComponent::LinearDrift { .. }
                    | NoiseComponent::Sinusoid { .. }
            )
        })
    }
}

/// Sampling grid of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TraceGrid {
    /// Smallest grid starting at `t0` that covers `duration`.
    pub fn covering(t0: f64, duration: f64, dt: f64) -> Result<Self, NoiseError> {
        if !(dt > 0.0 && dt.is_finite() && duration.is_finite() && t0.is_finite()) || duration < dt
        {
            return Err(NoiseError::InvalidGrid { duration, dt });
        }
        let len = ((duration / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(Self { t0, dt, len })
    }
}

/// Substream for component `k` of a trace addressed by `path`.
pub fn component_stream(master_seed: u64, path: &[u64], k: usize) -> StreamRng {
    let mut full = path.to_vec();
    full.push(k as u64);
    substream(master_seed, &full)
}

/// Sampled deviation B(t) − B₀.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrace {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl FieldTrace {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self, NoiseError> {
        if !(dt > 0.0 && dt.is_finite()) || samples.is_empty() {
            return Err(NoiseError::InvalidGrid { duration: dt * samples.len() as f64, dt });
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(NoiseError::InvalidParameter("non-finite trace sample".into()));
        }
        Ok(Self { t0, dt, samples })
    }

    pub fn constant(t0: f64, dt: f64, len: usize, value: f64) -> Self {
        Self { t0, dt, samples: vec![value; len.max(1)] }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.dt * self.samples.len() as f64
    }

    /// Midpoint time of sample `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        self.t0 + (i as f64 + 0.5) * self.dt
    }

    /// ∫ g(B(t)) dt over `[t_a, t_b]` for the piecewise-constant trace.
    pub fn integrate_with<F: Fn(f64) -> f64>(
        &self,
        t_a: f64,
        t_b: f64,
        g: F,
    ) -> Result<f64, NoiseError> {
        let slack = 1e-9 * self.dt;
        if !(t_a <= t_b) || t_a < self.t0 - slack || t_b > self.end() + slack {
            return Err(NoiseError::OutOfRange { t_a, t_b, start: self.t0, end: self.end() });
        }
        if t_a == t_b {
            return Ok(0.0);
        }
        let first = (((t_a - self.t0) / self.dt).floor().max(0.0) as usize).min(self.len() - 1);
        let mut acc = 0.0;
        for i in first..self.len() {
            let lo = (self.t0 + i as f64 * self.dt).max(t_a);
            let hi = (self.t0 + (i + 1) as f64 * self.dt).min(t_b);
            if hi <= lo {
                if lo >= t_b {
                    break;
                }
                continue;
            }
            acc += g(self.samples[i]) * (hi - lo);
        }
        Ok(acc)
    }

    /// CSV with header `t_s,delta_B_T`; times are sample midpoints.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_s,delta_B_T")?;
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(w, "{},{}", self.time_of(i), s)?;
        }
        Ok(())
    }
}

/// Common-mode field and ion-2-minus-ion-1 difference on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTrace {
    pub common: FieldTrace,
    pub differential: FieldTrace,
}

/// Trace of `spec` on `grid`; component `k` draws from `path ++ [k]`.
pub fn sample_on_grid(
    spec: &NoiseSpec,
    grid: TraceGrid,
    master_seed: u64,
    path: &[u64],
) -> Result<FieldTrace, NoiseError> {
    spec.validate()?;
    let mut samples = vec![0.0; grid.len];
    for (k, component) in spec.components.iter().enumerate() {
        let mut rng = component_stream(master_seed, path, k);
        component.accumulate(&grid, &mut rng, &mut samples);
    }
    FieldTrace::new(grid.t0, grid.dt, samples)
}

/// Trace of `spec` over `[0, duration]`, deterministic in (spec, grid, seed, stream).
pub fn sample_field_trace(
    spec: &NoiseSpec,
    duration: f64,
    dt: f64,
    master_seed: u64,
    stream_id: u64,
) -> Result<FieldTrace, NoiseError> {
    let grid = TraceGrid::covering(0.0, duration, dt)?;
    sample_on_grid(spec, grid, master_seed, &[stream_id])
}

/// Common and differential traces from independent substreams under `path`.
pub fn sample_gradient_on_grid(
    common_spec: &NoiseSpec,
    differential_spec: &NoiseSpec,
    grid: TraceGrid,
    master_seed: u64,
    path: &[u64],
) -> Result<GradientTrace, NoiseError> {
    let mut p = path.to_vec();
    p.push(0);
    let common = sample_on_grid(common_spec, grid, master_seed, &p)?;
    *p.last_mut().expect("nonempty") = 1;
    let differential = sample_on_grid(differential_spec, grid, master_seed, &p)?;
    Ok(GradientTrace { common, differential })
}

pub fn sample_gradient_trace(
    common_spec: &NoiseSpec,
    differential_spec: &NoiseSpec,
    duration: f64,
    dt: f64,
    master_seed: u64,
) -> Result<GradientTrace, NoiseError> {
    let grid = TraceGrid::covering(0.0, duration, dt)?;
    sample_gradient_on_grid(common_spec, differential_spec, grid, master_seed, &[])
}

/// Running sample statistics; halves of a trace merge exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStats {
    pub count: usize,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl TraceStats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let (&first, rest) = samples.split_first()?;
        let mut s = Self { count: 1, mean: first, m2: 0.0, min: first, max: first };
        for &x in rest {
            s.count += 1;
            let d = x - s.mean;
            s.mean += d / s.count as f64;
            s.m2 += d * (x - s.mean);
            s.min = s.min.min(x);
            s.max = s.max.max(x);
        }
        Some(s)
    }

    /// Population RMS deviation from the mean.
    pub fn rms(&self) -> f64 {
        (self.m2 / self.count as f64).sqrt()
    }

    pub fn merge(&self, other: &Self) -> Self {
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        Self {
            count: self.count + other.count,
            mean: self.mean + d * other.count as f64 / n,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * other.count as f64 / n,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }
}

pub fn trace_statistics(trace: &FieldTrace) -> TraceStats {
    TraceStats::from_samples(&trace.samples).expect("FieldTrace is never empty")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DephasingTime {
    Finite(f64),
    Unbounded,
}

impl DephasingTime {
    pub fn seconds(self) -> Option<f64> {
        match self {
            Self::Finite(t) => Some(t),
            Self::Unbounded => None,
        }
    }
}

/// Time for a static field error to accumulate `phase_threshold` radians:
/// t = threshold / (2π |d1 δB + ½ d2 δB²|).
pub fn predict_dephasing_time(
    sensitivity: &FieldSensitivity,
    delta_b: f64,
    phase_threshold: f64,
) -> Result<DephasingTime, NoiseError> {
    if !(phase_threshold > 0.0 && phase_threshold.is_finite()) {
        return Err(NoiseError::InvalidParameter("phase_threshold must be > 0".into()));
    }
    let detuning = sensitivity.detuning(delta_b).abs();
    if detuning == 0.0 || !detuning.is_finite() {
        return Ok(DephasingTime::Unbounded);
    }
    Ok(DephasingTime::Finite(phase_threshold / (2.0 * PI * detuning)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(c: NoiseComponent) -> NoiseSpec {
        NoiseSpec::new(vec![c])
    }

    #[test]
    fn constant_offset_everywhere() {
        let t = sample_field_trace(&spec(NoiseComponent::ConstantOffset { value: 1e-7 }), 1.0, 0.01, 1, 0)
            .unwrap();
        assert_eq!(t.len(), 100);
        assert!(t.samples.iter().all(|&s| s == 1e-7));
    }

    #[test]
    fn linear_drift_end_value() {
        let r = 3e-9;
        let t = sample_field_trace(&spec(NoiseComponent::LinearDrift { rate: r }), 50.0, 0.1, 1, 0)
            .unwrap();
        let last = *t.samples.last().unwrap();
        assert!((last - r * 50.0).abs() <= 0.1 * r);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = NoiseComponent::OrnsteinUhlenbeck { rms: 1e-7, correlation_time_s: 0.0 };
        assert!(sample_field_trace(&spec(bad), 1.0, 0.1, 1, 0).is_err());
        let nan = NoiseComponent::ConstantOffset { value: f64::NAN };
        assert!(sample_field_trace(&spec(nan), 1.0, 0.1, 1, 0).is_err());
        assert!(sample_field_trace(&NoiseSpec::zero(), 0.05, 0.1, 1, 0).is_err());
    }

    #[test]
    fn ou_stationary_std() {
        // 10⁶ samples of a 100 s correlation-time process over 10⁴ s
        let s = spec(NoiseComponent::OrnsteinUhlenbeck { rms: 1e-7, correlation_time_s: 100.0 });
        let t = sample_field_trace(&s, 1e4, 0.01, 42, 0).unwrap();
        assert_eq!(t.len(), 1_000_000);
        // 10⁴ s holds only ~50 independent correlation times, so pool
        // realizations from several streams for the ±10% check.
        let mut pooled = trace_statistics(&t);
        for stream in 1..8 {
            let u = sample_field_trace(&s, 1e4, 0.01, 42, stream).unwrap();
            pooled = pooled.merge(&trace_statistics(&u));
        }
        assert!((pooled.rms() - 1e-7).abs() < 0.1e-7, "{}", pooled.rms());
    }

    #[test]
    fn statistics_of_constant_and_sinusoid() {
        let c = FieldTrace::constant(0.0, 0.1, 50, 2.5);
        let s = trace_statistics(&c);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.rms(), 0.0);
        let sin = spec(NoiseComponent::Sinusoid { amplitude: 3.0, frequency_hz: 2.0, phase_rad: 0.3 });
        let t = sample_field_trace(&sin, 5.0, 1e-3, 1, 0).unwrap();
        let st = trace_statistics(&t);
        assert!((st.rms() - 3.0 / 2f64.sqrt()).abs() < 0.01 * 3.0 / 2f64.sqrt());
    }

    #[test]
    fn merged_halves_match_whole() {
        let s = spec(NoiseComponent::White { rms: 1.0 });
        let t = sample_field_trace(&s, 1.0, 1e-3, 9, 0).unwrap();
        let whole = trace_statistics(&t);
        let (a, b) = t.samples.split_at(377);
        let merged = TraceStats::from_samples(a).unwrap().merge(&TraceStats::from_samples(b).unwrap());
        assert_eq!(whole.count, merged.count);
        assert!((whole.mean - merged.mean).abs() < 1e-14);
        assert!((whole.rms() - merged.rms()).abs() < 1e-12);
        assert_eq!(whole.min, merged.min);
        assert_eq!(whole.max, merged.max);
    }

    #[test]
    fn integrate_partial_samples() {
        let t = FieldTrace::new(0.0, 1.0, vec![1.0, 2.0, 3.0]).unwrap();
        let v = t.integrate_with(0.5, 2.25, |b| b).unwrap();
        assert!((v - (0.5 + 2.0 + 0.75)).abs() < 1e-12);
        assert_eq!(t.integrate_with(1.0, 1.0, |b| b).unwrap(), 0.0);
        assert!(matches!(t.integrate_with(0.0, 3.5, |b| b), Err(NoiseError::OutOfRange { .. })));
    }

    #[test]
    fn dephasing_linear_sensitivity() {
        // 21 kHz/μT, 0.1 μT, 1 rad
        let s = FieldSensitivity::from_coefficients(21e3 / 1e-6, 0.0);
        let t = predict_dephasing_time(&s, 0.1e-6, 1.0).unwrap().seconds().unwrap();
        assert!((t - 75.8e-6).abs() < 0.5e-6, "{t}");
    }

    #[test]
    fn dephasing_quadratic_sensitivity() {
        // quadratic coefficient 0.305 Hz/μT² → d2 = 0.61 Hz/μT²
        let s = FieldSensitivity::from_coefficients(0.0, 2.0 * 0.305 / 1e-12);
        let t = predict_dephasing_time(&s, 0.1e-6, 1.0).unwrap().seconds().unwrap();
        assert!((t - 52.2).abs() < 0.2, "{t}");
        assert_eq!(predict_dephasing_time(&s, 0.0, 1.0).unwrap(), DephasingTime::Unbounded);
    }

    #[test]
    fn gradient_zero_and_constant() {
        let g = sample_gradient_trace(
            &spec(NoiseComponent::White { rms: 1e-8 }),
            &NoiseSpec::zero(),
            1.0,
            0.01,
            5,
        )
        .unwrap();
        assert!(g.differential.samples.iter().all(|&s| s == 0.0));
        assert_eq!(g.common.len(), g.differential.len());
        let g = sample_gradient_trace(
            &NoiseSpec::zero(),
            &spec(NoiseComponent::ConstantOffset { value: 4e-9 }),
            1.0,
            0.01,
            5,
        )
        .unwrap();
        assert!(g.differential.samples.iter().all(|&s| s == 4e-9));
    }

    #[test]
    fn csv_export() {
        let t = FieldTrace::new(0.0, 0.5, vec![1e-9, -2e-9]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_s,delta_B_T\n0.25,0.000000001\n0.75,-0.000000002\n");
    }
}
