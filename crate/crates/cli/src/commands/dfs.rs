use std::io::Write;

use ionmem_core::dfs::{run_dfs_lifetime_experiment, DetectionStatus, DfsExperiment, GradientSource};
use ionmem_core::estimation::{fit_sinusoid, DataPoint, FitError, Lifetime};
use ionmem_core::hyperfine::{field_sensitivity, DEFAULT_STENCIL_STEP};
use ionmem_core::noise::{NoiseComponent, NoiseSpec};

use super::{runtime, Report};
use crate::config::LoadedScenario;
use crate::output::OutputDir;
use crate::CliError;

/// Delays `start + k·step` for k covering `[start, start + window)`.
fn window_delays(starts: &[f64], window: f64, step: f64) -> Vec<f64> {
    let n = (window / step).round().max(1.0) as usize;
    starts.iter().flat_map(|&s| (0..n).map(move |k| s + k as f64 * step)).collect()
}

/// Ψ⁺ → Ψ⁻ oscillation windows and a damped-sinusoid fit.
pub fn cmd_run_dfs(loaded: &LoadedScenario, seed: u64, dir: &mut OutputDir) -> Result<(), CliError> {
    let (transition, field) = loaded.transition()?;
    let cfg = loaded.section(&loaded.scenario.dfs, "dfs")?;
    if cfg.delays_s.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(loaded.invalid("dfs.delays_s must be finite and >= 0"));
    }
    for (name, v) in [("window_s", cfg.window_s), ("step_s", cfg.step_s), ("trace_dt_s", cfg.trace_dt_s)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(loaded.invalid(format!("dfs.{name} must be > 0")));
        }
    }
    if cfg.shots == 0 {
        return Err(loaded.invalid("dfs.shots must be >= 1"));
    }
    if !cfg.differential_rate_hz.is_finite() {
        return Err(loaded.invalid("dfs.differential_rate_hz must be finite"));
    }

    let sens = field_sensitivity(&loaded.constants, transition, field, DEFAULT_STENCIL_STEP).map_err(runtime)?;
    if sens.d1 == 0.0 {
        return Err(loaded.invalid("dfs transition has zero field sensitivity at the operating field"));
    }
    // rates in Hz become field differences through the qubit slope
    let rate_noise = loaded.noise_spec(&cfg.differential_noise_hz, "dfs.differential_noise_hz")?;
    let mut differential = rate_noise.scaled(1.0 / sens.d1);
    if cfg.differential_rate_hz != 0.0 {
        differential
            .components
            .insert(0, NoiseComponent::ConstantOffset { value: cfg.differential_rate_hz / sens.d1 });
    }
    let common: NoiseSpec = loaded.noise_spec(&cfg.common_noise_t, "dfs.common_noise_t")?;

    let exp = DfsExperiment {
        delays: window_delays(&cfg.delays_s, cfg.window_s, cfg.step_s),
        gradient: GradientSource { common, differential, sensitivity_d1: sens.d1, dt: cfg.trace_dt_s },
        decay_rate: cfg.decay_rate_per_s,
        initial_contrast: cfg.initial_contrast,
        shots: cfg.shots,
        detection: cfg.detection,
    };
    let record = run_dfs_lifetime_experiment(&exp, seed).map_err(|e| match e {
        ionmem_core::dfs::DfsError::Invalid(m) => loaded.invalid(format!("dfs: {m}")),
        other => runtime(other),
    })?;

    dir.write_with("lifetime.csv", |w| record.write_csv(w))?;
    dir.write_with("parity.csv", |w| {
        writeln!(w, "t_D_s,zero_bright,one_bright,two_bright,shots,parity,detection_status")?;
        for r in &record.rows {
            let status = match r.status {
                DetectionStatus::Ok => "ok",
                DetectionStatus::OverlapWarning => "overlap_warning",
            };
            let [a, b, c] = r.tallies;
            writeln!(w, "{},{},{},{},{},{},{}", r.t_d, a, b, c, r.shots, r.parity(), status)?;
        }
        Ok(())
    })?;

    let points: Vec<DataPoint> =
        record.series.iter().map(|p| DataPoint::new(p.t_d, p.p_psi_minus, p.sigma)).collect();
    let mut report = Report::new("P(psi-)(t) = offset + A exp(-t/tau) cos(2 pi f t + phase)");
    report.value("field_T", field);
    report.value("d1_hz_per_t", sens.d1);
    report.value("points", points.len());
    match fit_sinusoid(&points, true) {
        Ok(fit) => {
            report.value("status", "ok");
            report.param("frequency_hz", fit.frequency);
            report.param("amplitude", fit.amplitude);
            report.param("phase_rad", fit.phase);
            report.param("offset", fit.offset);
            if let Some(rate) = fit.damping_rate {
                report.param("damping_rate_per_s", rate);
            }
            match fit.damping_time {
                Some(Lifetime::Finite(t)) => report.param("lifetime_s", t),
                _ => report.value("lifetime_s", "unbounded"),
            }
            report.value("chi2", fit.chi2);
            report.value("dof", fit.dof);
            report.value("peak_ratio", fit.peak_ratio);
            dir.write_with("plot_lifetime.csv", |w| {
                writeln!(w, "t_D_s,p_psi_minus,sigma,fit")?;
                let rate = fit.damping_rate.map_or(0.0, |r| r.value);
                for p in &points {
                    let f = fit.offset.value
                        + fit.amplitude.value
                            * (-rate * p.x).exp()
                            * (std::f64::consts::TAU * fit.frequency.value * p.x + fit.phase.value).cos();
                    writeln!(w, "{},{},{},{}", p.x, p.y, p.sigma, f)?;
                }
                Ok(())
            })?;
        }
        // a flat series is a result, not a failure
        Err(e @ FitError::NoOscillation { .. }) => report.value("status", format!("no_oscillation: {e}")),
        Err(e) => return Err(runtime(format!("sinusoid fit: {e}"))),
    }
    report.write(dir, "sinusoid_fit")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        let d = window_delays(&[0.0, 1.0], 0.002, 0.0005);
        assert_eq!(d, vec![0.0, 0.0005, 0.001, 0.0015, 1.0, 1.0005, 1.001, 1.0015]);
    }
}
