//! Breit–Rabi energies for J = 1/2.

use super::{check_field, HyperfineConstants, HyperfineError, LevelLabel, ZeemanLevel};

/// Closed-form energies of all 2(2I+1) levels at field `b`, in canonical label order.
pub fn level_energies_closed_form(
    constants: &HyperfineConstants,
    b: f64,
) -> Result<Vec<ZeemanLevel>, HyperfineError> {
    constants.validate()?;
    check_field(b)?;
    constants
        .labels()
        .into_iter()
        .map(|label| {
            let energy = energy(constants, label, b);
            if energy.is_finite() {
                Ok(ZeemanLevel { label, energy, field: b })
            } else {
                Err(HyperfineError::InvalidConstants(format!(
                    "Breit-Rabi square-root argument nonpositive for {label} at {b} T"
                )))
            }
        })
        .collect()
}

/// Energy of one level (Hz). The label must be valid; `b` may be negative.
///
/// For |m_F| < I + 1/2 the radicand 1 + 4 m x/(2I+1) + x² stays positive, so
/// the `F = I ± 1/2` branch is selected once by the sign in front of the root
/// and never swaps. The two stretch states are exact product states and are
/// evaluated linearly.
pub(crate) fn energy(c: &HyperfineConstants, label: LevelLabel, b: f64) -> f64 {
    let spin = c.nuclear_spin();
    let mu_b = c.bohr_magneton_over_h * b;
    let f_up = c.f_upper();
    let m = label.m_f as f64;

    if label.m_f.abs() == f_up {
        // |m_J = ±1/2, m_I = ±I⟩
        let sign = m.signum();
        return c.hyperfine_a * spin / 2.0 + sign * mu_b * (c.g_j / 2.0 + c.g_i * spin);
    }

    let dw = c.zero_field_splitting();
    let x = mu_b * (c.g_j - c.g_i) / dw;
    let radicand = 1.0 + 4.0 * m * x / (2.0 * spin + 1.0) + x * x;
    let branch = if label.f == f_up { 1.0 } else { -1.0 };
    -c.hyperfine_a / 4.0 + c.g_i * mu_b * m + branch * dw / 2.0 * radicand.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn be9() -> HyperfineConstants {
        HyperfineConstants::beryllium9()
    }

    #[test]
    fn eight_levels_for_spin_three_halves() {
        let levels = level_energies_closed_form(&be9(), 0.02).unwrap();
        assert_eq!(levels.len(), 8);
    }

    #[test]
    fn zero_field_manifolds_are_degenerate() {
        let c = be9();
        let levels = level_energies_closed_form(&c, 0.0).unwrap();
        let upper: Vec<f64> = levels.iter().filter(|l| l.label.f == 2).map(|l| l.energy).collect();
        let lower: Vec<f64> = levels.iter().filter(|l| l.label.f == 1).map(|l| l.energy).collect();
        assert_eq!(upper.len(), 5);
        assert_eq!(lower.len(), 3);
        for e in &upper {
            assert!((e - upper[0]).abs() < 1e-6);
        }
        for e in &lower {
            assert!((e - lower[0]).abs() < 1e-6);
        }
        // A(I + 1/2) = 2A for I = 3/2; ⁹Be⁺ has A < 0 so F = 1 lies above F = 2.
        assert!((lower[0] - upper[0] - 2.0 * c.hyperfine_a.abs()).abs() < 1e-6);
        assert!((lower[0] - upper[0] - 1.25e9).abs() < 0.01e9);
    }

    #[test]
    fn negative_field_is_rejected() {
        assert!(matches!(
            level_energies_closed_form(&be9(), -1e-3),
            Err(HyperfineError::InvalidField(_))
        ));
    }

    #[test]
    fn stretch_states_are_linear() {
        let c = be9();
        for m in [-2, 2] {
            let l = LevelLabel::new(2, m);
            let h = 1e-3;
            for b in [0.001, 0.1, 0.7] {
                let second = energy(&c, l, b + h) - 2.0 * energy(&c, l, b) + energy(&c, l, b - h);
                let floor = 8.0 * f64::EPSILON * energy(&c, l, b + h).abs();
                assert!(second.abs() <= floor, "{second} > {floor}");
            }
        }
    }

    #[test]
    fn energies_are_continuous_through_radicand_minimum() {
        // With A < 0, x is negative and the m = +1 radicand is smallest near |x| = 1/2.
        let c = be9();
        let x_half = 0.5 * c.zero_field_splitting().abs() / (c.bohr_magneton_over_h * (c.g_j - c.g_i));
        let l = LevelLabel::new(2, 1);
        let de = energy(&c, l, x_half + 1e-7) - energy(&c, l, x_half - 1e-7);
        assert!(de.abs() < 1e4, "{de}");
    }

    #[test]
    fn trace_is_zero() {
        let c = be9();
        for b in [0.0, 0.01, 0.3, 1.0] {
            let s: f64 = level_energies_closed_form(&c, b).unwrap().iter().map(|l| l.energy).sum();
            assert!(s.abs() < 1e-5, "B={b}: {s}");
        }
    }

    #[test]
    fn other_half_integer_spins() {
        for two_i in [1u32, 5, 7] {
            let c = HyperfineConstants { nuclear_spin_2i: two_i, ..be9() };
            let levels = level_energies_closed_form(&c, 0.05).unwrap();
            assert_eq!(levels.len(), 2 * (two_i as usize + 1));
            let s: f64 = levels.iter().map(|l| l.energy).sum();
            assert!(s.abs() < 1e-4);
        }
    }
}
