use approx::assert_relative_eq;
use ionmem_core::hyperfine::{
    all_transitions, enumerate_clock_fields, field_sensitivity, find_clock_field,
    level_energies_closed_form, level_energies_diagonalize, transition_frequency,
    DEFAULT_STENCIL_STEP,
};
use ionmem_core::{HyperfineConstants, LevelLabel, Transition};
use proptest::prelude::*;

fn be9() -> HyperfineConstants {
    HyperfineConstants::beryllium9()
}

proptest! {
    #[test]
    fn closed_form_matches_diagonalization(b in 0.0f64..1.0) {
        let c = be9();
        let a = level_energies_closed_form(&c, b).unwrap();
        let d = level_energies_diagonalize(&c, b).unwrap();
        prop_assert_eq!(a.len(), 8);
        for (x, y) in a.iter().zip(&d) {
            prop_assert_eq!(x.label, y.label);
            let scale = x.energy.abs().max(y.energy.abs());
            prop_assert!((x.energy - y.energy).abs() <= 1e-10 * scale, "{} at {b}: {} vs {}", x.label, x.energy, y.energy);
        }
    }

    // energies are measured from the centroid, so the Hamiltonian is traceless
    #[test]
    fn energies_are_traceless(b in 0.0f64..1.0) {
        let levels = level_energies_closed_form(&be9(), b).unwrap();
        let sum: f64 = levels.iter().map(|l| l.energy).sum();
        let scale: f64 = levels.iter().map(|l| l.energy.abs()).sum();
        prop_assert!(sum.abs() <= 1e-12 * scale);
    }

    #[test]
    fn frequency_ignores_direction(b in 0.0f64..0.1, k in 0usize..28) {
        let c = be9();
        let t = all_transitions(&c)[k];
        prop_assert_eq!(transition_frequency(&c, t, b).unwrap(), transition_frequency(&c, t.reversed(), b).unwrap());
    }

    // the stretch state has no m_F partner, so it moves linearly with B
    #[test]
    fn stretch_state_is_linear(b in 0.0f64..0.5) {
        let c = be9();
        let e = |x: f64| {
            level_energies_closed_form(&c, x)
                .unwrap()
                .into_iter()
                .find(|l| l.label == LevelLabel::new(2, 2))
                .unwrap()
                .energy
        };
        let h = 0.01;
        let curvature = e(b + 2.0 * h) - 2.0 * e(b + h) + e(b);
        prop_assert!(curvature.abs() <= 1e-12 * e(b + h).abs().max(1e6));
    }
}

#[test]
fn zero_field_splitting_is_two_a() {
    let c = be9();
    let levels = level_energies_diagonalize(&c, 0.0).unwrap();
    let upper = levels.iter().find(|l| l.label.f == 2).unwrap().energy;
    let lower = levels.iter().find(|l| l.label.f == 1).unwrap().energy;
    assert_relative_eq!((upper - lower).abs(), 2.0 * c.hyperfine_a.abs(), max_relative = 1e-12);
}

#[test]
fn clock_point_has_zero_slope() {
    let c = be9();
    let t = Transition::be9_clock_qubit();
    let root = find_clock_field(&c, t, (0.011, 0.013)).unwrap();
    let s = field_sensitivity(&c, t, root.field, DEFAULT_STENCIL_STEP).unwrap();
    // zero up to finite-difference round-off (a few Hz/T, i.e. ~1e-6 Hz/uT)
    assert!(s.d1.abs() <= 2.0 * s.d1_noise.max(1.0), "d1 = {}, noise {}", s.d1, s.d1_noise);
    assert!(s.d2 > 0.0);
}

#[test]
fn enumeration_contains_the_qubit_point() {
    let c = be9();
    let points = enumerate_clock_fields(&c, (0.0, 0.05), 1e-5).unwrap();
    let fields: Vec<f64> = points.iter().map(|p| p.field).collect();
    assert!(fields.windows(2).all(|w| w[0] <= w[1]));
    let qubit = points.iter().find(|p| p.transition == Transition::be9_clock_qubit()).unwrap();
    let direct = find_clock_field(&c, Transition::be9_clock_qubit(), (0.011, 0.013)).unwrap();
    assert_relative_eq!(qubit.field, direct.field, max_relative = 1e-9);
}

#[test]
fn rejects_bad_input() {
    let c = be9();
    assert!(transition_frequency(&c, Transition::be9_clock_qubit(), -1e-3).is_err());
    assert!(transition_frequency(&c, Transition::be9_clock_qubit(), f64::NAN).is_err());
    let bad = Transition::new(LevelLabel::new(3, 0), LevelLabel::new(1, 1));
    assert!(transition_frequency(&c, bad, 0.01).is_err());
    let mut broken = c;
    broken.nuclear_spin_2i = 2;
    assert!(level_energies_closed_form(&broken, 0.01).is_err());
    assert!(find_clock_field(&c, Transition::be9_field_probe(), (0.011, 0.013)).is_err());
}
