//! Single-qubit evolution: rotations, noisy free precession, Ramsey and
//! spin-echo sequences with projective detection.
//!
//! Basis order is `(|↑⟩, |↓⟩)`. Accumulated phase φ_D multiplies the |↑⟩
//! amplitude, so that R(π/2, φ) after free evolution gives
//! P↑ = (1 − cos(φ_D + φ))/2.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyperfine::FieldSensitivity;
use crate::noise::{sample_on_grid, FieldTrace, NoiseError, NoiseSpec, TraceGrid};
use crate::rng::substream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
}

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub amplitudes: [Complex64; 2],
}

impl QubitState {
    pub fn up() -> Self {
        Self { amplitudes: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)] }
    }

    pub fn down() -> Self {
        Self { amplitudes: [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)] }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn prob_up(&self) -> f64 {
        self.amplitudes[0].norm_sqr()
    }

    /// Multiply the |↑⟩ amplitude by e^{iφ}.
    pub fn with_phase(self, phi: f64) -> Self {
        let [up, down] = self.amplitudes;
        Self { amplitudes: [up * Complex64::from_polar(1.0, phi), down] }
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

/// R(θ, φ) = cos(θ/2) I − i sin(θ/2) (cos φ σ_x + sin φ σ_y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub theta: f64,
    pub phi: f64,
}

impl Rotation {
    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let c = Complex64::new((self.theta / 2.0).cos(), 0.0);
        let s = (self.theta / 2.0).sin();
        // −i s (cos φ σx + sin φ σy): off-diagonals −i s e^{∓iφ}
        let upper = -I * s * Complex64::from_polar(1.0, -self.phi);
        let lower = -I * s * Complex64::from_polar(1.0, self.phi);
        [[c, upper], [lower, c]]
    }
}

pub fn rotate(state: &QubitState, r: Rotation) -> QubitState {
    let m = r.matrix();
    let [a, b] = state.amplitudes;
    QubitState { amplitudes: [m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b] }
}

/// Accumulated phase 2π ∫ [offset + d1 δB + ½ d2 δB²] dt over `interval`.
pub fn free_evolve_phase(
    sensitivity: &FieldSensitivity,
    trace: &FieldTrace,
    detuning_offset: f64,
    interval: (f64, f64),
) -> Result<f64, DynamicsError> {
    let (t_a, t_b) = interval;
    let field_part = trace.integrate_with(t_a, t_b, |b| sensitivity.detuning(b))?;
    Ok(2.0 * PI * (detuning_offset * (t_b - t_a) + field_part))
}

fn check_echo_times(echo_times: &[f64], duration: f64) -> Result<(), DynamicsError> {
    let mut prev = f64::NEG_INFINITY;
    for &t in echo_times {
        if !(t >= 0.0 && t <= duration && t > prev) {
            return Err(DynamicsError::InvalidSequence(format!(
                "echo times must be strictly increasing within [0, {duration}] s, got {echo_times:?}"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// Phase with refocusing π pulses at `echo_times` (relative to the interval
/// start). Each pulse flips the sign of subsequently accumulated phase.
pub fn apply_echo_sequence(
    echo_times: &[f64],
    sensitivity: &FieldSensitivity,
    trace: &FieldTrace,
    detuning_offset: f64,
    interval: (f64, f64),
) -> Result<f64, DynamicsError> {
    let (t_a, t_b) = interval;
    check_echo_times(echo_times, t_b - t_a)?;
    let mut edges = Vec::with_capacity(echo_times.len() + 2);
    edges.push(t_a);
    edges.extend(echo_times.iter().map(|&t| t_a + t));
    edges.push(t_b);
    let mut phase = 0.0;
    let mut sign = 1.0;
    for seg in edges.windows(2) {
        phase += sign * free_evolve_phase(sensitivity, trace, detuning_offset, (seg[0], seg[1]))?;
        sign = -sign;
    }
    Ok(phase)
}

/// P↑ = (1 − cos(φ_D + φ))/2.
pub fn ramsey_probability(phi_d: f64, phi: f64) -> f64 {
    0.5 * (1.0 - (phi_d + phi).cos())
}

/// How field noise is realized across the shots of a phase scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Fresh independent realization per shot.
    PerShot,
    /// One continuous trace; shots run back to back, phases in listed order.
    SequentialDrift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyNoise {
    pub spec: NoiseSpec,
    /// Trace resolution (s).
    pub dt: f64,
    pub mode: NoiseMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseySequence {
    /// Ramsey interval (s).
    pub t_r: f64,
    /// Phases φ of the final π/2 pulse, in acquisition order.
    pub analysis_phases: Vec<f64>,
    /// Local oscillator minus transition frequency (Hz).
    pub detuning_offset: f64,
    /// π-pulse times relative to the first π/2 pulse (s).
    pub echo_times: Vec<f64>,
    pub shots_per_phase: u32,
    /// Fringe visibility from pulse and state-preparation imperfections (≤ 1).
    pub visibility: f64,
    /// Dead time per shot for cooling and detection (s).
    pub shot_overhead: f64,
}

impl RamseySequence {
    pub fn new(t_r: f64, analysis_phases: Vec<f64>, shots_per_phase: u32) -> Self {
        Self {
            t_r,
            analysis_phases,
            detuning_offset: 0.0,
            echo_times: Vec::new(),
            shots_per_phase,
            visibility: 1.0,
            shot_overhead: 0.0,
        }
    }

    /// `n` phases evenly covering [0, 2π).
    pub fn uniform_phases(n: usize) -> Vec<f64> {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidSequence(m));
        if !(self.t_r >= 0.0 && self.t_r.is_finite()) {
            return bad(format!("T_R must be finite and >= 0, got {}", self.t_r));
        }
        if self.shots_per_phase < 1 {
            return bad("shots_per_phase must be >= 1".into());
        }
        if self.analysis_phases.is_empty() || self.analysis_phases.iter().any(|p| !p.is_finite()) {
            return bad("analysis_phases must be a nonempty list of finite values".into());
        }
        if !(self.visibility >= 0.0 && self.visibility <= 1.0) {
            return bad(format!("visibility must lie in [0, 1], got {}", self.visibility));
        }
        if !(self.shot_overhead >= 0.0 && self.shot_overhead.is_finite()) {
            return bad("shot_overhead must be finite and >= 0".into());
        }
        if !self.detuning_offset.is_finite() {
            return bad("detuning_offset must be finite".into());
        }
        check_echo_times(&self.echo_times, self.t_r)
    }

    fn shot_period(&self) -> f64 {
        self.t_r + self.shot_overhead
    }

    fn detection_probability(&self, phi_d: f64, phi: f64) -> f64 {
        (0.5 * (1.0 - self.visibility * (phi_d + phi).cos())).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub phi: f64,
    pub upcount: u32,
    pub shots: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanRecord {
    pub rows: Vec<PhaseRow>,
    pub t_r: f64,
    pub seed: u64,
    pub scenario: String,
}

impl PhaseScanRecord {
    /// CSV with header `phi_rad,upcount,shots`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "phi_rad,upcount,shots")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.phi, r.upcount, r.shots)?;
        }
        Ok(())
    }
}

// Substream tags under a scan's path.
const TAG_SHOT_NOISE: u64 = 1;
const TAG_DETECTION: u64 = 2;
const TAG_DRIFT_TRACE: u64 = 3;

fn shot_phase(
    seq: &RamseySequence,
    sensitivity: &FieldSensitivity,
    trace: &FieldTrace,
    start: f64,
) -> Result<f64, DynamicsError> {
    apply_echo_sequence(&seq.echo_times, sensitivity, trace, seq.detuning_offset, (start, start + seq.t_r))
}

/// One Ramsey phase scan. Randomness is addressed under `path`, so scans
/// with different paths are independent and any scan is reproducible alone.
pub fn run_ramsey_phase_scan(
    seq: &RamseySequence,
    sensitivity: &FieldSensitivity,
    noise: &RamseyNoise,
    master_seed: u64,
    path: &[u64],
) -> Result<PhaseScanRecord, DynamicsError> {
    seq.validate()?;
    noise.spec.validate()?;
    if !(noise.dt > 0.0 && noise.dt.is_finite()) {
        return Err(NoiseError::InvalidGrid { duration: seq.t_r, dt: noise.dt }.into());
    }
    let shots = seq.shots_per_phase as usize;
    let path_with = |extra: &[u64]| {
        let mut p = path.to_vec();
        p.extend_from_slice(extra);
        p
    };

    let drift_trace = match noise.mode {
        NoiseMode::SequentialDrift => {
            let total = seq.analysis_phases.len() as f64 * shots as f64 * seq.shot_period();
            let dt = noise.dt.min(total.max(f64::MIN_POSITIVE));
            let grid = TraceGrid::covering(0.0, total.max(dt), dt)?;
            Some(sample_on_grid(&noise.spec, grid, master_seed, &path_with(&[TAG_DRIFT_TRACE]))?)
        }
        NoiseMode::PerShot => None,
    };

    let rows: Result<Vec<PhaseRow>, DynamicsError> = seq
        .analysis_phases
        .par_iter()
        .enumerate()
        .map(|(p, &phi)| {
            let mut detect = substream(master_seed, &path_with(&[TAG_DETECTION, p as u64]));
            let mut upcount = 0u32;
            for s in 0..shots {
                let phi_d = if seq.t_r == 0.0 {
                    0.0
                } else {
                    match &drift_trace {
                        Some(trace) => {
                            let start = (p * shots + s) as f64 * seq.shot_period();
                            shot_phase(seq, sensitivity, trace, start)?
                        }
                        None => {
                            let dt = noise.dt.min(seq.t_r);
                            let grid = TraceGrid::covering(0.0, seq.t_r, dt)?;
                            let trace = sample_on_grid(
                                &noise.spec,
                                grid,
                                master_seed,
                                &path_with(&[TAG_SHOT_NOISE, p as u64, s as u64]),
                            )?;
                            shot_phase(seq, sensitivity, &trace, 0.0)?
                        }
                    }
                };
                let prob = seq.detection_probability(phi_d, phi);
                if detect.random::<f64>() < prob {
                    upcount += 1;
                }
            }
            Ok(PhaseRow { phi, upcount, shots: seq.shots_per_phase })
        })
        .collect();

    Ok(PhaseScanRecord { rows: rows?, t_r: seq.t_r, seed: master_seed, scenario: String::new() })
}

/// One phase scan per Ramsey interval, each on its own substream.
pub fn run_contrast_vs_interval(
    t_r_list: &[f64],
    template: &RamseySequence,
    sensitivity: &FieldSensitivity,
    noise: &RamseyNoise,
    master_seed: u64,
) -> Result<Vec<(f64, PhaseScanRecord)>, DynamicsError> {
    if t_r_list.is_empty() {
        return Err(DynamicsError::InvalidSequence("T_R list is empty".into()));
    }
    t_r_list
        .par_iter()
        .enumerate()
        .map(|(k, &t_r)| {
            let seq = RamseySequence { t_r, ..template.clone() };
            run_ramsey_phase_scan(&seq, sensitivity, noise, master_seed, &[k as u64])
                .map(|r| (t_r, r))
        })
        .collect()
}
