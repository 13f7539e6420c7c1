//! Ground-state hyperfine/Zeeman structure of a J = 1/2 ion.
//!
//! Energies are expressed as frequencies (Hz) relative to the hyperfine
//! centroid. The Hamiltonian is
//!
//! ```text
//! H/h = A I·J + (g_J J_z + g_I I_z) (μ_B/h) B
//! ```
//!
//! with `g_I` carrying its physical sign in the Bohr-magneton convention.
//! Levels are labelled `(F, m_F)` by adiabatic continuation from B = 0.

mod clock;
mod closed_form;
mod diagonalize;
mod sensitivity;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clock::{
    enumerate_clock_fields, find_clock_field, ClockField, ClockPoint, ClockStatus, ROOT_STENCIL_STEP,
};
pub use closed_form::level_energies_closed_form;
pub use diagonalize::level_energies_diagonalize;
pub use sensitivity::{
    field_sensitivity, FieldSensitivity, SensitivityStatus, DEFAULT_STENCIL_STEP,
    CLOCK_ZERO_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperfineError {
    #[error("invalid atomic constants: {0}")]
    InvalidConstants(String),
    #[error("magnetic field must be non-negative and finite, got {0} T")]
    InvalidField(f64),
    #[error("level label {0} does not exist for nuclear spin 2I = {1}")]
    UnknownLabel(LevelLabel, u32),
    #[error("invalid finite-difference step {step} T at field {field} T")]
    InvalidStep { step: f64, field: f64 },
    #[error("first derivative does not change sign on [{lo}, {hi}] T")]
    NoRoot { lo: f64, hi: f64 },
}

/// Atomic inputs that fix the ground-state spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperfineConstants {
    /// Magnetic-dipole hyperfine constant (Hz). Negative for an inverted manifold.
    #[serde(rename = "hyperfine_A_hz")]
    pub hyperfine_a: f64,
    #[serde(rename = "g_J")]
    pub g_j: f64,
    /// Nuclear g-factor in units of the Bohr magneton, sign included.
    #[serde(rename = "g_I")]
    pub g_i: f64,
    /// Twice the nuclear spin; must be odd.
    #[serde(rename = "nuclear_spin_2I")]
    pub nuclear_spin_2i: u32,
    #[serde(rename = "mu_B_over_h_hz_per_t")]
    pub bohr_magneton_over_h: f64,
}

impl HyperfineConstants {
    /// ⁹Be⁺ 2s ²S₁/₂ defaults.
    ///
    /// A and g_I'/g_J from the rf-optical double resonance measurement of
    /// Wineland, Bollinger and Itano (1983); g_J = 2.00226206; μ_B/h from
    /// CODATA. g_I = +2.134779853e-4 · g_J (the ⁹Be nuclear moment is
    /// negative, so the +g_I μ_B B I_z term has a positive coefficient).
    pub fn beryllium9() -> Self {
        let g_j = 2.002_262_06;
        Self {
            hyperfine_a: -625_008_837.048,
            g_j,
            g_i: 2.134_779_853e-4 * g_j,
            nuclear_spin_2i: 3,
            bohr_magneton_over_h: 13.996_245_042e9,
        }
    }

    pub fn validate(&self) -> Result<(), HyperfineError> {
        let finite = [self.hyperfine_a, self.g_j, self.g_i, self.bohr_magneton_over_h]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(HyperfineError::InvalidConstants("non-finite value".into()));
        }
        if self.hyperfine_a == 0.0 {
            return Err(HyperfineError::InvalidConstants("hyperfine_A_hz must be nonzero".into()));
        }
        if self.g_j <= 0.0 {
            return Err(HyperfineError::InvalidConstants("g_J must be positive".into()));
        }
        if self.bohr_magneton_over_h <= 0.0 {
            return Err(HyperfineError::InvalidConstants(
                "mu_B_over_h_hz_per_t must be positive".into(),
            ));
        }
        if self.nuclear_spin_2i % 2 != 1 {
            return Err(HyperfineError::InvalidConstants(format!(
                "nuclear_spin_2I must be odd (half-integer I), got {}",
                self.nuclear_spin_2i
            )));
        }
        Ok(())
    }

    pub fn nuclear_spin(&self) -> f64 {
        self.nuclear_spin_2i as f64 / 2.0
    }

    /// F = I + 1/2.
    pub fn f_upper(&self) -> i32 {
        (self.nuclear_spin_2i as i32 + 1) / 2
    }

    /// F = I - 1/2.
    pub fn f_lower(&self) -> i32 {
        self.f_upper() - 1
    }

    pub fn level_count(&self) -> usize {
        2 * (self.nuclear_spin_2i as usize + 1)
    }

    /// Zero-field hyperfine splitting A (I + 1/2), signed.
    pub fn zero_field_splitting(&self) -> f64 {
        self.hyperfine_a * (self.nuclear_spin() + 0.5)
    }

    /// All `(F, m_F)` labels in canonical order: F = I+1/2 first, m_F ascending.
    pub fn labels(&self) -> Vec<LevelLabel> {
        let mut out = Vec::with_capacity(self.level_count());
        for f in [self.f_upper(), self.f_lower()] {
            for m in -f..=f {
                out.push(LevelLabel::new(f, m));
            }
        }
        out
    }

    pub fn check_label(&self, label: LevelLabel) -> Result<(), HyperfineError> {
        let ok = (label.f == self.f_upper() || label.f == self.f_lower())
            && label.m_f.abs() <= label.f;
        if ok {
            Ok(())
        } else {
            Err(HyperfineError::UnknownLabel(label, self.nuclear_spin_2i))
        }
    }

    /// Position of `label` in [`labels`](Self::labels) and in the level lists.
    pub fn label_index(&self, label: LevelLabel) -> Result<usize, HyperfineError> {
        self.check_label(label)?;
        let fu = self.f_upper();
        if label.f == fu {
            Ok((label.m_f + fu) as usize)
        } else {
            Ok((2 * fu + 1) as usize + (label.m_f + label.f) as usize)
        }
    }
}

/// Low-field label `|F, m_F⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LevelLabel {
    pub f: i32,
    pub m_f: i32,
}

impl LevelLabel {
    pub const fn new(f: i32, m_f: i32) -> Self {
        Self { f, m_f }
    }
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}⟩", self.f, self.m_f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanLevel {
    pub label: LevelLabel,
    /// Hz, relative to the hyperfine centroid.
    pub energy: f64,
    /// Tesla.
    pub field: f64,
}

/// A pair of levels. The frequency is always the absolute energy difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub lower: LevelLabel,
    pub upper: LevelLabel,
}

impl Transition {
    pub const fn new(lower: LevelLabel, upper: LevelLabel) -> Self {
        Self { lower, upper }
    }

    /// `|F=2, m_F=0⟩ ↔ |F=1, m_F=1⟩`, the ⁹Be⁺ field-independent qubit near 0.01194 T.
    pub const fn be9_clock_qubit() -> Self {
        Self::new(LevelLabel::new(2, 0), LevelLabel::new(1, 1))
    }

    /// `|F=2, m_F=2⟩ ↔ |F=1, m_F=1⟩`, the field probe transition.
    pub const fn be9_field_probe() -> Self {
        Self::new(LevelLabel::new(2, 2), LevelLabel::new(1, 1))
    }

    /// `|F=2, m_F=-2⟩ ↔ |F=1, m_F=-1⟩`, the field-sensitive qubit.
    pub const fn be9_field_sensitive_qubit() -> Self {
        Self::new(LevelLabel::new(2, -2), LevelLabel::new(1, -1))
    }

    pub fn reversed(self) -> Self {
        Self::new(self.upper, self.lower)
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ↔ {}", self.lower, self.upper)
    }
}

/// Absolute energy difference of the two levels at field `b` (T, b ≥ 0).
pub fn transition_frequency(
    constants: &HyperfineConstants,
    transition: Transition,
    b: f64,
) -> Result<f64, HyperfineError> {
    check_field(b)?;
    Ok(signed_splitting(constants, transition, b)?.abs())
}

/// E(upper) − E(lower) from the closed form. Accepts signed fields; the
/// closed form is analytic in B, and B < 0 means a reversed field.
pub(crate) fn signed_splitting(
    constants: &HyperfineConstants,
    transition: Transition,
    b: f64,
) -> Result<f64, HyperfineError> {
    constants.validate()?;
    constants.check_label(transition.lower)?;
    constants.check_label(transition.upper)?;
    Ok(closed_form::energy(constants, transition.upper, b)
        - closed_form::energy(constants, transition.lower, b))
}

pub(crate) fn check_field(b: f64) -> Result<(), HyperfineError> {
    if b.is_finite() && b >= 0.0 {
        Ok(())
    } else {
        Err(HyperfineError::InvalidField(b))
    }
}

/// Every unordered pair of distinct levels, in canonical label order.
pub fn all_transitions(constants: &HyperfineConstants) -> Vec<Transition> {
    let labels = constants.labels();
    let mut out = Vec::new();
    for (i, &a) in labels.iter().enumerate() {
        for &b in &labels[i + 1..] {
            out.push(Transition::new(a, b));
        }
    }
    out
}
