//! Scenario files (TOML) and the atomic-constants file they reference.

use std::fs;
use std::path::{Path, PathBuf};

use ionmem_core::dfs::DetectionModel;
use ionmem_core::dynamics::NoiseMode;
use ionmem_core::hyperfine::{find_clock_field, HyperfineConstants, LevelLabel, Transition};
use ionmem_core::noise::{NoiseComponent, NoiseSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Used when `--seed` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub atom: AtomSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dfs: Option<DfsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parabola: Option<ParabolaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    /// Constants file, relative to the scenario file.
    pub constants: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSection {
    /// [F, m_F]
    pub lower: [i32; 2],
    pub upper: [i32; 2],
    /// Operating field. Exactly one of `field_t` and `clock_search_t` is required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_t: Option<f64>,
    /// Bracket in which to locate the clock field and operate there.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_search_t: Option<[f64; 2]>,
}

/// Field noise in tesla.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub mode: NoiseMode,
    pub dt_s: f64,
    #[serde(default)]
    pub components: Vec<NoiseComponent>,
}

fn one() -> f64 {
    1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSection {
    pub t_r_s: Vec<f64>,
    /// Number of analysis phases, evenly covering [0, 2π).
    pub phases: usize,
    pub shots_per_phase: u32,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub visibility: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shot_overhead_s: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub detuning_offset_hz: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub echo_times_s: Vec<f64>,
    /// Parametric bootstrap resamples for the τ uncertainty (0 = off).
    #[serde(default)]
    pub bootstrap_resamples: usize,
}

fn ideal() -> DetectionModel {
    DetectionModel::Ideal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfsSection {
    /// Window start delays (s).
    pub delays_s: Vec<f64>,
    pub window_s: f64,
    pub step_s: f64,
    pub shots: u32,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub initial_contrast: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_rate_per_s: Option<f64>,
    /// Static |01⟩/|10⟩ phase rate (Hz).
    pub differential_rate_hz: f64,
    /// Fluctuations of that rate, in Hz; converted to tesla through the
    /// qubit's field sensitivity.
    #[serde(default)]
    pub differential_noise_hz: Vec<NoiseComponent>,
    /// Field noise seen by both ions (T).
    #[serde(default)]
    pub common_noise_t: Vec<NoiseComponent>,
    pub trace_dt_s: f64,
    #[serde(default = "ideal")]
    pub detection: DetectionModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub field_range_t: [f64; 2],
    pub grid_step_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolaSection {
    /// Explicit fields; overrides the centred grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields_t: Option<Vec<f64>>,
    /// Grid centre; defaults to the transition's operating field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_t: Option<f64>,
    #[serde(default)]
    pub half_width_t: f64,
    #[serde(default)]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementSection>,
}

/// Simulated noisy measurements alongside the theory curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub points: usize,
    pub field_sigma_t: f64,
    pub frequency_sigma_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Also write one sampled noise trace (`trace.csv`).
    #[serde(default)]
    pub write_trace: bool,
}

/// A parsed scenario with its constants resolved.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub constants: HyperfineConstants,
    pub path: PathBuf,
    /// SHA-256 over the scenario and constants file bytes.
    pub hash: String,
}

fn config_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {msg}", path.display()))
}

pub fn parse_scenario(text: &str) -> Result<Scenario, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn parse_constants(text: &str) -> Result<HyperfineConstants, String> {
    let c: HyperfineConstants = toml::from_str(text).map_err(|e| e.to_string())?;
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| config_err(path, e))?;
    let scenario = parse_scenario(&text).map_err(|e| config_err(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cpath = base.join(&scenario.atom.constants);
    let ctext = fs::read_to_string(&cpath).map_err(|e| config_err(&cpath, e))?;
    let constants = parse_constants(&ctext).map_err(|e| config_err(&cpath, e))?;
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    h.update([0u8]);
    h.update(ctext.as_bytes());
    let hash = hex::encode(h.finalize());
    Ok(LoadedScenario { scenario, constants, path: path.to_path_buf(), hash })
}

impl LoadedScenario {
    pub fn invalid(&self, msg: impl std::fmt::Display) -> CliError {
        config_err(&self.path, msg)
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        s.as_ref().ok_or_else(|| self.invalid(format!("missing [{name}] section")))
    }

    /// Selected transition and its operating field.
    pub fn transition(&self) -> Result<(Transition, f64), CliError> {
        let t = self.section(&self.scenario.transition, "transition")?;
        let label = |v: [i32; 2]| LevelLabel::new(v[0], v[1]);
        let tr = Transition::new(label(t.lower), label(t.upper));
        for l in [tr.lower, tr.upper] {
            self.constants.check_label(l).map_err(|e| self.invalid(e))?;
        }
        let field = match (t.field_t, t.clock_search_t) {
            (Some(b), None) => {
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(self.invalid(format!("transition.field_t must be >= 0, got {b}")));
                }
                b
            }
            (None, Some([lo, hi])) => find_clock_field(&self.constants, tr, (lo, hi))
                .map_err(|e| self.invalid(format!("transition.clock_search_t: {e}")))?
                .field,
            _ => {
                return Err(self.invalid(
                    "transition needs exactly one of field_t and clock_search_t",
                ))
            }
        };
        Ok((tr, field))
    }

    pub fn noise_spec(&self, components: &[NoiseComponent], what: &str) -> Result<NoiseSpec, CliError> {
        let spec = NoiseSpec::new(components.to_vec());
        spec.validate().map_err(|e| self.invalid(format!("{what}: {e}")))?;
        Ok(spec)
    }
}
