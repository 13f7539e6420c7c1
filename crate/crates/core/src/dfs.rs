//! Two-ion decoherence-free-subspace memory.
//!
//! Basis order `|00⟩, |01⟩, |10⟩, |11⟩`, first digit ion 1. Physical qubit
//! `|0⟩ = |F=1, m_F=−1⟩`, `|1⟩ = |F=2, m_F=−2⟩`; `|1⟩` is the bright state at
//! detection. A field shift adds phase to the `|1⟩` component of each ion, so
//! only the difference between the two ions moves population between Ψ⁺ and
//! Ψ⁻.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Rotation;
use crate::estimation::binomial_sigma;
use crate::noise::{sample_gradient_on_grid, NoiseError, NoiseSpec, TraceGrid};
use crate::rng::substream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DfsError {
    #[error("state has weight {0:e} outside span{{|01⟩, |10⟩}}")]
    OutsideSubspace(f64),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("invalid DFS experiment: {0}")]
    Invalid(String),
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const SUBSPACE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    pub amplitudes: [Complex64; 4],
}

impl TwoQubitState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// |⟨self|other⟩|, insensitive to global phase.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm()
    }

    pub fn basis(index: usize) -> Self {
        let mut amplitudes = [ZERO; 4];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    fn from_real(a: [f64; 4]) -> Self {
        Self { amplitudes: a.map(|x| Complex64::new(x, 0.0)) }
    }

    /// (|01⟩ + |10⟩)/√2
    pub fn psi_plus() -> Self {
        Self::from_real([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0])
    }

    /// (|01⟩ − |10⟩)/√2
    pub fn psi_minus() -> Self {
        Self::from_real([0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0])
    }

    /// (|00⟩ + |11⟩)/√2
    pub fn phi_plus() -> Self {
        Self::from_real([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])
    }

    /// Probability of each bright-ion count (0, 1, 2).
    pub fn bright_count_probabilities(&self) -> [f64; 3] {
        let p = self.amplitudes.map(|a| a.norm_sqr());
        [p[0], p[1] + p[2], p[3]]
    }

    /// ⟨σ_z ⊗ σ_z⟩ = P(0 bright) + P(2 bright) − P(1 bright).
    pub fn parity(&self) -> f64 {
        let [p0, p1, p2] = self.bright_count_probabilities();
        p0 + p2 - p1
    }
}

/// Idealized entangling-gate output (|00⟩ − i|11⟩)/√2.
pub fn prepare_phi_minus_i() -> TwoQubitState {
    TwoQubitState {
        amplitudes: [
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            ZERO,
            ZERO,
            Complex64::new(0.0, -FRAC_1_SQRT_2),
        ],
    }
}

/// R ⊗ R.
pub fn collective_rotate(state: &TwoQubitState, r: Rotation) -> TwoQubitState {
    let m = r.matrix();
    let a = &state.amplitudes;
    let mut out = [ZERO; 4];
    for (i1, row1) in m.iter().enumerate() {
        for (i2, row2) in m.iter().enumerate() {
            let mut acc = ZERO;
            for (j1, &u1) in row1.iter().enumerate() {
                for (j2, &u2) in row2.iter().enumerate() {
                    acc += u1 * u2 * a[2 * j1 + j2];
                }
            }
            out[2 * i1 + i2] = acc;
        }
    }
    TwoQubitState { amplitudes: out }
}

/// Phase e^{iφ_k} on the |1⟩ component of ion k.
pub fn local_phases(state: &TwoQubitState, phi_ion1: f64, phi_ion2: f64) -> TwoQubitState {
    let e1 = Complex64::from_polar(1.0, phi_ion1);
    let e2 = Complex64::from_polar(1.0, phi_ion2);
    let [a00, a01, a10, a11] = state.amplitudes;
    TwoQubitState { amplitudes: [a00, a01 * e2, a10 * e1, a11 * e1 * e2] }
}

/// cos(Δφ/2)|Ψ⁺⟩ + i sin(Δφ/2)|Ψ⁻⟩ for Ψ⁺ input: relative phase e^{iΔφ}
/// between |01⟩ and |10⟩, split symmetrically so no common phase is added.
pub fn gradient_evolve(state: &TwoQubitState, delta_phi: f64) -> Result<TwoQubitState, DfsError> {
    let leak = state.amplitudes[0].norm_sqr() + state.amplitudes[3].norm_sqr();
    if leak > SUBSPACE_TOLERANCE {
        return Err(DfsError::OutsideSubspace(leak));
    }
    let [_, a01, a10, _] = state.amplitudes;
    Ok(TwoQubitState {
        amplitudes: [
            ZERO,
            a01 * Complex64::from_polar(1.0, 0.5 * delta_phi),
            a10 * Complex64::from_polar(1.0, -0.5 * delta_phi),
            ZERO,
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfsProbabilities {
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub leak: f64,
}

pub fn dfs_probabilities(state: &TwoQubitState) -> DfsProbabilities {
    let psi_plus = TwoQubitState::psi_plus().inner(state).norm_sqr();
    let psi_minus = TwoQubitState::psi_minus().inner(state).norm_sqr();
    let total = state.norm().powi(2);
    DfsProbabilities { psi_plus, psi_minus, leak: (total - psi_plus - psi_minus).max(0.0) }
}

/// How bright-ion counts are read out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectionModel {
    /// Number of bright ions observed without error.
    Ideal,
    /// Poisson photon counts, classified by fixed thresholds:
    /// `n < thresholds[0]` → 0 bright, `n < thresholds[1]` → 1 bright, else 2.
    Poisson { lambda_bright: f64, lambda_background: f64, thresholds: [u32; 2] },
}

impl DetectionModel {
    /// λ_bright = 30, λ_bg = 2 per window; thresholds roughly halfway between means.
    /// The 1- and 2-bright count distributions overlap enough to trip the warning.
    pub fn poisson_default() -> Self {
        Self::Poisson { lambda_bright: 30.0, lambda_background: 2.0, thresholds: [17, 47] }
    }

    /// Worst-case probability that a k-bright outcome is classified wrongly.
    pub fn misclassification(&self) -> f64 {
        match *self {
            Self::Ideal => 0.0,
            Self::Poisson { lambda_bright, lambda_background, thresholds } => (0..3)
                .map(|k| {
                    let mean = k as f64 * lambda_bright + lambda_background;
                    let below_lo = poisson_cdf(mean, thresholds[0] as i64 - 1);
                    let below_hi = poisson_cdf(mean, thresholds[1] as i64 - 1);
                    match k {
                        0 => 1.0 - below_lo,
                        1 => below_lo + (1.0 - below_hi),
                        _ => below_hi,
                    }
                })
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self) -> Result<(), DfsError> {
        match *self {
            Self::Ideal => Ok(()),
            Self::Poisson { lambda_bright, lambda_background, thresholds } => {
                let ok = lambda_bright >= 0.0
                    && lambda_background >= 0.0
                    && lambda_bright.is_finite()
                    && lambda_background.is_finite()
                    && thresholds[0] <= thresholds[1];
                if ok {
                    Ok(())
                } else {
                    Err(DfsError::Invalid("Poisson detection parameters".into()))
                }
            }
        }
    }
}

/// P(N ≤ k) for N ~ Poisson(mean).
fn poisson_cdf(mean: f64, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let mut term = (-mean).exp();
    let mut sum = term;
    for n in 1..=k {
        term *= mean / n as f64;
        sum += term;
    }
    sum.min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionStatus {
    Ok,
    /// Threshold classification errs on more than 1% of some outcome class.
    OverlapWarning,
}

/// Tallies of 0/1/2-bright outcomes at one delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityRow {
    pub t_d: f64,
    pub tallies: [u32; 3],
    pub shots: u32,
    pub status: DetectionStatus,
}

impl ParityRow {
    pub fn parity(&self) -> f64 {
        let n = self.shots as f64;
        (self.tallies[0] as f64 + self.tallies[2] as f64 - self.tallies[1] as f64) / n
    }

    /// Fraction of one-bright outcomes, which is P(Ψ⁻) after the readout pulse.
    pub fn p_psi_minus(&self) -> f64 {
        self.tallies[1] as f64 / self.shots as f64
    }
}

fn sample_bright_count<R: Rng>(state: &TwoQubitState, rng: &mut R) -> usize {
    let [p0, p1, _] = state.bright_count_probabilities();
    let u: f64 = rng.random();
    if u < p0 {
        0
    } else if u < p0 + p1 {
        1
    } else {
        2
    }
}

fn classify<R: Rng>(bright: usize, model: &DetectionModel, rng: &mut R) -> usize {
    match *model {
        DetectionModel::Ideal => bright,
        DetectionModel::Poisson { lambda_bright, lambda_background, thresholds } => {
            let mean = bright as f64 * lambda_bright + lambda_background;
            let counts = if mean > 0.0 {
                Poisson::new(mean).expect("positive mean").sample(rng) as u32
            } else {
                0
            };
            if counts < thresholds[0] {
                0
            } else if counts < thresholds[1] {
                1
            } else {
                2
            }
        }
    }
}

/// Apply the readout pulse R(π/2, 0) ⊗ R(π/2, 0) and tally `shots` detections.
pub fn measure_parity_counts<R: Rng>(
    state: &TwoQubitState,
    detection: &DetectionModel,
    shots: u32,
    rng: &mut R,
) -> Result<ParityRow, DfsError> {
    if shots < 1 {
        return Err(DfsError::Invalid("shots must be >= 1".into()));
    }
    detection.validate()?;
    let final_state = collective_rotate(state, Rotation::new(PI / 2.0, 0.0));
    let mut tallies = [0u32; 3];
    for _ in 0..shots {
        let bright = sample_bright_count(&final_state, rng);
        tallies[classify(bright, detection, rng)] += 1;
    }
    Ok(ParityRow { t_d: 0.0, tallies, shots, status: status_of(detection) })
}

fn status_of(detection: &DetectionModel) -> DetectionStatus {
    if detection.misclassification() > 0.01 {
        DetectionStatus::OverlapWarning
    } else {
        DetectionStatus::Ok
    }
}

/// Source of per-shot field differences between the ions.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSource {
    /// Field seen equally by both ions (T).
    pub common: NoiseSpec,
    /// B(ion 2) − B(ion 1) (T).
    pub differential: NoiseSpec,
    /// Hz/T of the physical qubit transition.
    pub sensitivity_d1: f64,
    /// Trace resolution (s).
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfsExperiment {
    pub delays: Vec<f64>,
    pub gradient: GradientSource,
    /// Extra exponential loss of Ψ± coherence (1/s), on top of the gradient noise.
    pub decay_rate: Option<f64>,
    /// Coherence right after preparation (≤ 1); stands in for gate infidelity.
    pub initial_contrast: f64,
    pub shots: u32,
    pub detection: DetectionModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimePoint {
    pub t_d: f64,
    pub p_psi_minus: f64,
    pub sigma: f64,
    pub shots: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfsLifetimeRecord {
    pub rows: Vec<ParityRow>,
    pub series: Vec<LifetimePoint>,
}

impl DfsLifetimeRecord {
    /// CSV with header `t_D_s,p_psi_minus,sigma,shots`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_D_s,p_psi_minus,sigma,shots")?;
        for p in &self.series {
            writeln!(w, "{},{},{},{}", p.t_d, p.p_psi_minus, p.sigma, p.shots)?;
        }
        Ok(())
    }
}

/// Prepare Φ₋ᵢ → R(π/2, −π/4) on both ions → gradient evolution for t_D →
/// parity readout, for each delay.
pub fn run_dfs_lifetime_experiment(
    exp: &DfsExperiment,
    master_seed: u64,
) -> Result<DfsLifetimeRecord, DfsError> {
    if exp.shots < 1 {
        return Err(DfsError::Invalid("shots must be >= 1".into()));
    }
    if exp.delays.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(DfsError::Invalid("delays must be finite and >= 0".into()));
    }
    if !(exp.initial_contrast >= 0.0 && exp.initial_contrast <= 1.0) {
        return Err(DfsError::Invalid("initial_contrast must lie in [0, 1]".into()));
    }
    if let Some(rate) = exp.decay_rate {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(DfsError::Invalid("decay_rate must be finite and >= 0".into()));
        }
    }
    let g = &exp.gradient;
    if !(g.dt > 0.0 && g.dt.is_finite() && g.sensitivity_d1.is_finite()) {
        return Err(DfsError::Invalid("gradient dt and sensitivity must be finite, dt > 0".into()));
    }
    g.common.validate()?;
    g.differential.validate()?;
    exp.detection.validate()?;

    let psi_plus = collective_rotate(&prepare_phi_minus_i(), Rotation::new(PI / 2.0, -PI / 4.0));
    let status = status_of(&exp.detection);

    let rows: Result<Vec<ParityRow>, DfsError> = exp
        .delays
        .par_iter()
        .enumerate()
        .map(|(k, &t_d)| {
            let mut rng = substream(master_seed, &[k as u64, 0]);
            let mut tallies = [0u32; 3];
            for shot in 0..exp.shots {
                let (phi1, phi2) = if t_d > 0.0 {
                    let dt = g.dt.min(t_d);
                    let grid = TraceGrid::covering(0.0, t_d, dt)?;
                    let trace = sample_gradient_on_grid(
                        &g.common,
                        &g.differential,
                        grid,
                        master_seed,
                        &[k as u64, 1, shot as u64],
                    )?;
                    let common = trace.common.integrate_with(0.0, t_d, |b| b)?;
                    let diff = trace.differential.integrate_with(0.0, t_d, |b| b)?;
                    let scale = 2.0 * PI * g.sensitivity_d1;
                    (scale * common, scale * (common + diff))
                } else {
                    (0.0, 0.0)
                };
                let keep = exp.initial_contrast * (-exp.decay_rate.unwrap_or(0.0) * t_d).exp();
                let scramble = if rng.random::<f64>() >= keep {
                    2.0 * PI * rng.random::<f64>()
                } else {
                    0.0
                };
                let evolved = local_phases(&psi_plus, phi1, phi2 + scramble);
                let final_state = collective_rotate(&evolved, Rotation::new(PI / 2.0, 0.0));
                let bright = sample_bright_count(&final_state, &mut rng);
                tallies[classify(bright, &exp.detection, &mut rng)] += 1;
            }
            Ok(ParityRow { t_d, tallies, shots: exp.shots, status })
        })
        .collect();
    let rows = rows?;
    let series = rows
        .iter()
        .map(|r| LifetimePoint {
            t_d: r.t_d,
            p_psi_minus: r.p_psi_minus(),
            sigma: binomial_sigma(r.tallies[1], r.shots),
            shots: r.shots,
        })
        .collect();
    Ok(DfsLifetimeRecord { rows, series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseComponent;

    #[test]
    fn phi_minus_i_amplitudes() {
        let s = prepare_phi_minus_i();
        assert_eq!(s.amplitudes[0], Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_eq!(s.amplitudes[3], Complex64::new(0.0, -FRAC_1_SQRT_2));
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.overlap(&TwoQubitState::psi_plus()), 0.0);
        assert_eq!(s.overlap(&TwoQubitState::psi_minus()), 0.0);
    }

    #[test]
    fn preparation_rotation_gives_psi_plus() {
        let out = collective_rotate(&prepare_phi_minus_i(), Rotation::new(PI / 2.0, -PI / 4.0));
        assert!((out.overlap(&TwoQubitState::psi_plus()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn readout_rotation_maps_psi_plus_to_phi_plus() {
        let out = collective_rotate(&TwoQubitState::psi_plus(), Rotation::new(PI / 2.0, 0.0));
        assert!((out.overlap(&TwoQubitState::phi_plus()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_evolution_endpoints() {
        let p = TwoQubitState::psi_plus();
        let same = gradient_evolve(&p, 0.0).unwrap();
        assert!((same.overlap(&p) - 1.0).abs() < 1e-15);
        let flipped = gradient_evolve(&p, PI).unwrap();
        let probs = dfs_probabilities(&flipped);
        assert!((probs.psi_minus - 1.0).abs() < 1e-15);
        // gradient amplitudes: cos(Δφ/2) on Ψ⁺ and i sin(Δφ/2) on Ψ⁻
        let d = 0.7;
        let s = gradient_evolve(&p, d).unwrap();
        let a_plus = TwoQubitState::psi_plus().inner(&s);
        let a_minus = TwoQubitState::psi_minus().inner(&s);
        assert!((a_plus - Complex64::new((d / 2.0).cos(), 0.0)).norm() < 1e-15);
        assert!((a_minus - Complex64::new(0.0, (d / 2.0).sin())).norm() < 1e-15);
    }

    #[test]
    fn gradient_evolution_rejects_leakage() {
        assert!(matches!(
            gradient_evolve(&prepare_phi_minus_i(), 0.3),
            Err(DfsError::OutsideSubspace(_))
        ));
    }

    #[test]
    fn probabilities_of_reference_states() {
        let p = dfs_probabilities(&TwoQubitState::psi_plus());
        assert!((p.psi_plus - 1.0).abs() < 1e-15 && p.psi_minus < 1e-15 && p.leak < 1e-15);
        let p = dfs_probabilities(&TwoQubitState::basis(1));
        assert!((p.psi_plus - 0.5).abs() < 1e-15 && (p.psi_minus - 0.5).abs() < 1e-15);
        let p = dfs_probabilities(&prepare_phi_minus_i());
        assert!((p.leak - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singlet_readout_is_always_one_bright() {
        let mut rng = substream(1, &[]);
        let row =
            measure_parity_counts(&TwoQubitState::psi_minus(), &DetectionModel::Ideal, 500, &mut rng)
                .unwrap();
        assert_eq!(row.tallies, [0, 500, 0]);
        assert_eq!(row.status, DetectionStatus::Ok);
    }

    #[test]
    fn triplet_readout_is_never_one_bright() {
        let mut rng = substream(2, &[]);
        let row =
            measure_parity_counts(&TwoQubitState::psi_plus(), &DetectionModel::Ideal, 2000, &mut rng)
                .unwrap();
        assert_eq!(row.tallies[1], 0);
        assert!(row.tallies[0] > 850 && row.tallies[2] > 850, "{:?}", row.tallies);
    }

    #[test]
    fn dark_poisson_detection() {
        let model = DetectionModel::Poisson {
            lambda_bright: 0.0,
            lambda_background: 2.0,
            thresholds: [17, 47],
        };
        let mut rng = substream(3, &[]);
        let row = measure_parity_counts(&TwoQubitState::psi_minus(), &model, 300, &mut rng).unwrap();
        assert_eq!(row.tallies, [300, 0, 0]);
        assert_eq!(row.status, DetectionStatus::OverlapWarning);
    }

    #[test]
    fn poisson_overlap_warning() {
        // 1- and 2-bright distributions (means 32 and 62) overlap by a few percent
        assert!(DetectionModel::poisson_default().misclassification() > 0.01);
        let wide = DetectionModel::Poisson {
            lambda_bright: 120.0,
            lambda_background: 2.0,
            thresholds: [40, 180],
        };
        assert!(wide.misclassification() < 0.01);
        let close = DetectionModel::Poisson {
            lambda_bright: 5.0,
            lambda_background: 2.0,
            thresholds: [5, 10],
        };
        assert!(close.misclassification() > 0.01);
    }

    #[test]
    fn zero_gradient_gives_no_singlet() {
        let exp = DfsExperiment {
            delays: vec![0.0, 0.1, 0.5],
            gradient: GradientSource {
                common: NoiseSpec::new(vec![NoiseComponent::White { rms: 1e-7 }]),
                differential: NoiseSpec::zero(),
                sensitivity_d1: 2.1e10,
                dt: 1e-3,
            },
            decay_rate: None,
            initial_contrast: 1.0,
            shots: 200,
            detection: DetectionModel::Ideal,
        };
        let rec = run_dfs_lifetime_experiment(&exp, 11).unwrap();
        assert!(rec.series.iter().all(|p| p.p_psi_minus == 0.0));
    }

    #[test]
    fn poisson_cdf_values() {
        assert!((poisson_cdf(2.0, 0) - (-2f64).exp()).abs() < 1e-15);
        assert!((poisson_cdf(2.0, 100) - 1.0).abs() < 1e-12);
        assert_eq!(poisson_cdf(2.0, -1), 0.0);
    }
}
