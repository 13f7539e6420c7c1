use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ionmem_core::dfs::{run_dfs_lifetime_experiment, DetectionModel, DfsExperiment, GradientSource};
use ionmem_core::dynamics::{run_ramsey_phase_scan, NoiseMode, RamseyNoise, RamseySequence};
use ionmem_core::estimation::{fit_exponential_decay, fit_phase_curve, fit_sinusoid, DataPoint};
use ionmem_core::hyperfine::{
    enumerate_clock_fields, field_sensitivity, level_energies_closed_form, level_energies_diagonalize,
    DEFAULT_STENCIL_STEP,
};
use ionmem_core::noise::sample_field_trace;
use ionmem_core::{FieldSensitivity, HyperfineConstants, NoiseComponent, NoiseSpec, Transition};

fn spectrum(c: &mut Criterion) {
    let k = HyperfineConstants::beryllium9();
    c.bench_function("energies/closed_form", |b| b.iter(|| level_energies_closed_form(&k, black_box(0.0119))));
    c.bench_function("energies/diagonalize", |b| b.iter(|| level_energies_diagonalize(&k, black_box(0.0119))));
    c.bench_function("sensitivity/stencil", |b| {
        b.iter(|| field_sensitivity(&k, Transition::be9_clock_qubit(), black_box(0.0119), DEFAULT_STENCIL_STEP))
    });
    c.bench_function("clock_scan/0-0.03T", |b| b.iter(|| enumerate_clock_fields(&k, (0.0, 0.03), 1e-5)));
}

fn traces(c: &mut Criterion) {
    let spec = NoiseSpec::new(vec![
        NoiseComponent::OrnsteinUhlenbeck { rms: 3.3e-7, correlation_time_s: 10.0 },
        NoiseComponent::RandomWalk { diffusion: 1e-16 },
    ]);
    c.bench_function("trace/10k_samples", |b| b.iter(|| sample_field_trace(&spec, 500.0, 0.05, black_box(1), 0)));
}

fn experiments(c: &mut Criterion) {
    let sens = FieldSensitivity::from_coefficients(0.0, 0.61e12);
    let noise = RamseyNoise {
        spec: NoiseSpec::new(vec![NoiseComponent::OrnsteinUhlenbeck { rms: 3.3e-7, correlation_time_s: 10.0 }]),
        dt: 0.05,
        mode: NoiseMode::SequentialDrift,
    };
    let seq = RamseySequence::new(4.0, RamseySequence::uniform_phases(16), 100);
    c.bench_function("ramsey/16x100", |b| b.iter(|| run_ramsey_phase_scan(&seq, &sens, &noise, black_box(7), &[])));

    let exp = DfsExperiment {
        delays: (0..48).map(|k| 1.0 + k as f64 * 5e-4).collect(),
        gradient: GradientSource {
            common: NoiseSpec::new(vec![NoiseComponent::OrnsteinUhlenbeck { rms: 1e-7, correlation_time_s: 1.0 }]),
            differential: NoiseSpec::new(vec![NoiseComponent::ConstantOffset { value: 5.86e-9 }]),
            sensitivity_d1: 2.13e10,
            dt: 0.01,
        },
        decay_rate: None,
        initial_contrast: 0.9,
        shots: 200,
        detection: DetectionModel::Ideal,
    };
    c.bench_function("dfs/48_delays_x200", |b| b.iter(|| run_dfs_lifetime_experiment(&exp, black_box(3))));
}

fn fits(c: &mut Criterion) {
    let fringe: Vec<DataPoint> = (0..16)
        .map(|k| {
            let p = 2.0 * PI * k as f64 / 16.0;
            DataPoint::new(p, 0.5 - 0.45 * (p + 1.1).cos(), 0.03)
        })
        .collect();
    c.bench_function("fit/phase_curve", |b| b.iter(|| fit_phase_curve(black_box(&fringe))));

    let decay: Vec<DataPoint> = [0.004, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
        .into_iter()
        .map(|t| DataPoint::new(t, 0.93 * (-t / 14.7f64).exp(), 0.03))
        .collect();
    c.bench_function("fit/exponential_decay", |b| b.iter(|| fit_exponential_decay(black_box(&decay))));

    let osc: Vec<DataPoint> = [0.0, 0.3, 1.0, 2.0]
        .into_iter()
        .flat_map(|s| (0..48).map(move |k| s + k as f64 * 5e-4))
        .map(|t| DataPoint::new(t, 0.5 - 0.45 * (-t / 7.3f64).exp() * (2.0 * PI * 125.0 * t).cos(), 0.035))
        .collect();
    c.bench_function("fit/damped_sinusoid", |b| b.iter(|| fit_sinusoid(black_box(&osc), true)));
}

criterion_group!(benches, spectrum, traces, experiments, fits);
criterion_main!(benches);
