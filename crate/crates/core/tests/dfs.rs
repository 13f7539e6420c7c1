use std::f64::consts::PI;

use ionmem_core::dfs::{
    collective_rotate, dfs_probabilities, gradient_evolve, local_phases, measure_parity_counts,
    prepare_phi_minus_i, run_dfs_lifetime_experiment, DetectionModel, DfsExperiment, GradientSource,
    TwoQubitState,
};
use ionmem_core::dynamics::Rotation;
use ionmem_core::rng::substream;
use ionmem_core::{NoiseComponent, NoiseSpec};
use proptest::prelude::*;

fn psi_plus_prepared() -> TwoQubitState {
    collective_rotate(&prepare_phi_minus_i(), Rotation::new(PI / 2.0, -PI / 4.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn singlet_is_rotation_invariant(theta in 0.0f64..(2.0 * PI), phi in 0.0f64..(2.0 * PI)) {
        let s = TwoQubitState::psi_minus();
        let out = collective_rotate(&s, Rotation::new(theta, phi));
        prop_assert!((out.overlap(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_rotates_psi_plus_into_psi_minus(dphi in -20.0f64..20.0) {
        let p = dfs_probabilities(&gradient_evolve(&TwoQubitState::psi_plus(), dphi).unwrap());
        prop_assert!((p.psi_minus - (dphi / 2.0).sin().powi(2)).abs() < 1e-12);
        prop_assert!((p.psi_plus - (dphi / 2.0).cos().powi(2)).abs() < 1e-12);
        prop_assert!(p.leak < 1e-12);
    }

    #[test]
    fn uniform_phase_leaves_subspace_populations(phi in -20.0f64..20.0, dphi in -5.0f64..5.0) {
        let start = gradient_evolve(&TwoQubitState::psi_plus(), dphi).unwrap();
        let before = dfs_probabilities(&start);
        let after = dfs_probabilities(&local_phases(&start, phi, phi));
        prop_assert!((before.psi_minus - after.psi_minus).abs() < 1e-12);
        prop_assert!((before.psi_plus - after.psi_plus).abs() < 1e-12);
    }

    #[test]
    fn local_phases_match_gradient(phi1 in -5.0f64..5.0, phi2 in -5.0f64..5.0) {
        let a = dfs_probabilities(&local_phases(&TwoQubitState::psi_plus(), phi1, phi2));
        let b = dfs_probabilities(&gradient_evolve(&TwoQubitState::psi_plus(), phi2 - phi1).unwrap());
        prop_assert!((a.psi_minus - b.psi_minus).abs() < 1e-12);
    }
}

#[test]
fn preparation_and_readout_overlaps() {
    assert!((psi_plus_prepared().overlap(&TwoQubitState::psi_plus()) - 1.0).abs() < 1e-12);
    let readout = collective_rotate(&TwoQubitState::psi_plus(), Rotation::new(PI / 2.0, 0.0));
    assert!((readout.overlap(&TwoQubitState::phi_plus()) - 1.0).abs() < 1e-12);
}

#[test]
fn sampled_parity_agrees_with_state() {
    let shots = 4000;
    for (k, dphi) in [0.0, 0.7, PI / 2.0, 2.5, PI].into_iter().enumerate() {
        let s = gradient_evolve(&TwoQubitState::psi_plus(), dphi).unwrap();
        let exact = collective_rotate(&s, Rotation::new(PI / 2.0, 0.0)).parity();
        let mut rng = substream(17, &[k as u64]);
        let row = measure_parity_counts(&s, &DetectionModel::Ideal, shots, &mut rng).unwrap();
        let sd = ((1.0 - exact * exact) / shots as f64).sqrt().max(1.0 / shots as f64);
        assert!((row.parity() - exact).abs() <= 4.0 * sd, "Δφ {dphi}: {} vs {exact}", row.parity());
    }
}

fn experiment(differential: NoiseSpec, common: NoiseSpec) -> DfsExperiment {
    DfsExperiment {
        delays: vec![0.0, 0.001, 0.002, 0.003],
        gradient: GradientSource { common, differential, sensitivity_d1: 2e10, dt: 1e-3 },
        decay_rate: None,
        initial_contrast: 1.0,
        shots: 200,
        detection: DetectionModel::Ideal,
    }
}

#[test]
fn common_mode_noise_never_leaves_psi_plus() {
    let common = NoiseSpec::new(vec![
        NoiseComponent::OrnsteinUhlenbeck { rms: 1e-6, correlation_time_s: 1e-3 },
        NoiseComponent::White { rms: 1e-6 },
    ]);
    let rec = run_dfs_lifetime_experiment(&experiment(NoiseSpec::zero(), common), 3).unwrap();
    assert!(rec.series.iter().all(|p| p.p_psi_minus == 0.0));
}

#[test]
fn static_gradient_oscillates_at_d1_times_offset() {
    // 2e10 Hz/T · 6.25e-9 T = 125 Hz; at t = 4 ms the relative phase is π
    let diff = NoiseSpec::new(vec![NoiseComponent::ConstantOffset { value: 6.25e-9 }]);
    let mut exp = experiment(diff, NoiseSpec::zero());
    exp.delays = vec![0.004];
    let rec = run_dfs_lifetime_experiment(&exp, 3).unwrap();
    assert_eq!(rec.series[0].p_psi_minus, 1.0);
}

#[test]
fn experiment_is_deterministic() {
    let diff = NoiseSpec::new(vec![
        NoiseComponent::ConstantOffset { value: 6.25e-9 },
        NoiseComponent::OrnsteinUhlenbeck { rms: 1e-11, correlation_time_s: 0.05 },
    ]);
    let mut exp = experiment(diff, NoiseSpec::zero());
    exp.initial_contrast = 0.9;
    exp.detection = DetectionModel::poisson_default();
    let a = run_dfs_lifetime_experiment(&exp, 5).unwrap();
    let b = run_dfs_lifetime_experiment(&exp, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn leaked_state_is_refused() {
    assert!(gradient_evolve(&TwoQubitState::phi_plus(), 0.3).is_err());
    let mut exp = experiment(NoiseSpec::zero(), NoiseSpec::zero());
    exp.shots = 0;
    assert!(run_dfs_lifetime_experiment(&exp, 0).is_err());
}
