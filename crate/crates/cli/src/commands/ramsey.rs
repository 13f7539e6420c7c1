use std::io::Write;

use ionmem_core::dynamics::{run_contrast_vs_interval, RamseyNoise, RamseySequence};
use ionmem_core::estimation::{
    bootstrap_decay, fit_exponential_decay, fit_phase_scan, phase_scan_points, DataPoint, Lifetime,
};
use ionmem_core::hyperfine::{field_sensitivity, DEFAULT_STENCIL_STEP};
use ionmem_core::noise::sample_field_trace;

use super::{runtime, scenario_name, Report};
use crate::config::LoadedScenario;
use crate::output::OutputDir;
use crate::CliError;

/// Substream reserved for the optional example trace.
const TRACE_STREAM: u64 = u64::MAX;

/// Phase scans at every T_R, fringe fits, contrast decay fit.
pub fn cmd_run_ramsey(loaded: &LoadedScenario, seed: u64, dir: &mut OutputDir) -> Result<(), CliError> {
    let (transition, field) = loaded.transition()?;
    let seq_cfg = loaded.section(&loaded.scenario.sequence, "sequence")?;
    let noise_cfg = loaded.section(&loaded.scenario.noise, "noise")?;
    let spec = loaded.noise_spec(&noise_cfg.components, "noise.components")?;
    let noise = RamseyNoise { spec, dt: noise_cfg.dt_s, mode: noise_cfg.mode };
    if !(noise.dt > 0.0 && noise.dt.is_finite()) {
        return Err(loaded.invalid("noise.dt_s must be > 0"));
    }
    if seq_cfg.t_r_s.is_empty() {
        return Err(loaded.invalid("sequence.t_r_s is empty"));
    }
    let template = RamseySequence {
        t_r: seq_cfg.t_r_s[0],
        analysis_phases: RamseySequence::uniform_phases(seq_cfg.phases),
        detuning_offset: seq_cfg.detuning_offset_hz,
        echo_times: seq_cfg.echo_times_s.clone(),
        shots_per_phase: seq_cfg.shots_per_phase,
        visibility: seq_cfg.visibility,
        shot_overhead: seq_cfg.shot_overhead_s,
    };
    for &t_r in &seq_cfg.t_r_s {
        RamseySequence { t_r, ..template.clone() }
            .validate()
            .map_err(|e| loaded.invalid(format!("sequence: {e}")))?;
    }

    let sens = field_sensitivity(&loaded.constants, transition, field, DEFAULT_STENCIL_STEP).map_err(runtime)?;
    let scans = run_contrast_vs_interval(&seq_cfg.t_r_s, &template, &sens, &noise, seed).map_err(runtime)?;

    let mut fits = Vec::with_capacity(scans.len());
    for (k, (t_r, record)) in scans.iter().enumerate() {
        let mut record = record.clone();
        record.scenario = scenario_name(loaded).to_string();
        dir.write_with(&format!("phase_scan_{k:02}.csv"), |w| record.write_csv(w))?;
        let fit = fit_phase_scan(&record).map_err(|e| runtime(format!("phase scan at T_R = {t_r} s: {e}")))?;
        let points = phase_scan_points(&record);
        dir.write_with(&format!("plot_fringe_{k:02}.csv"), |w| {
            writeln!(w, "phi_rad,p_up,sigma,fit")?;
            for p in &points {
                let f = fit.a.value - 0.5 * fit.b.value * (fit.d.value * p.x + fit.phi_d.value).cos();
                writeln!(w, "{},{},{},{}", p.x, p.y, p.sigma, f)?;
            }
            Ok(())
        })?;
        fits.push((*t_r, fit));
    }

    dir.write_with("fringe_fits.csv", |w| {
        writeln!(w, "T_R_s,a,a_sigma,b,b_sigma,d,d_sigma,phi_D,phi_D_sigma,chi2,dof")?;
        for (t_r, f) in &fits {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                t_r, f.a.value, f.a.sigma, f.b.value, f.b.sigma, f.d.value, f.d.sigma, f.phi_d.value,
                f.phi_d.sigma, f.chi2, f.dof
            )?;
        }
        Ok(())
    })?;
    let contrast: Vec<DataPoint> = fits.iter().map(|(t, f)| DataPoint::new(*t, f.b.value, f.b.sigma)).collect();
    dir.write_with("contrast.csv", |w| {
        writeln!(w, "T_R_s,contrast,contrast_sigma")?;
        for p in &contrast {
            writeln!(w, "{},{},{}", p.x, p.y, p.sigma)?;
        }
        Ok(())
    })?;

    let mut report = Report::new("contrast decay b(T_R) = b0 exp(-T_R/tau)");
    report.value("field_T", field);
    report.value("points", contrast.len());
    match fit_exponential_decay(&contrast) {
        Ok(decay) => {
            report.value("status", "ok");
            report.param("b0", decay.b0);
            report.param("rate_per_s", decay.rate);
            match decay.tau {
                Lifetime::Finite(tau) => report.param("tau_s", tau),
                Lifetime::Unbounded => report.value("tau_s", "unbounded"),
            }
            if seq_cfg.bootstrap_resamples > 0 {
                match bootstrap_decay(&contrast, &decay, seq_cfg.bootstrap_resamples, seed) {
                    Some(s) => report.value("tau_bootstrap_sigma_s", s),
                    None => report.value("tau_bootstrap_sigma_s", "unavailable"),
                }
            }
            report.value("chi2", decay.chi2);
            report.value("dof", decay.dof);
            if let Some(w) = &decay.warning {
                report.note(&format!("warning: {w}"));
            }
            let c = decay.covariance;
            report.covariance(&["b0", "rate_per_s"], &[c[0].to_vec(), c[1].to_vec()]);
            dir.write_with("plot_contrast.csv", |w| {
                writeln!(w, "T_R_s,contrast,sigma,fit")?;
                for p in &contrast {
                    let f = decay.b0.value * (-decay.rate.value * p.x).exp();
                    writeln!(w, "{},{},{},{}", p.x, p.y, p.sigma, f)?;
                }
                Ok(())
            })?;
        }
        Err(e) if contrast.len() < 2 => {
            report.value("status", format!("not_fitted: {e}"));
        }
        Err(e) => return Err(runtime(format!("decay fit: {e}"))),
    }
    report.write(dir, "decay_fit")?;

    if loaded.scenario.output.as_ref().is_some_and(|o| o.write_trace) {
        let duration = seq_cfg.t_r_s.iter().cloned().fold(noise.dt, f64::max);
        let trace = sample_field_trace(&noise.spec, duration, noise.dt, seed, TRACE_STREAM).map_err(runtime)?;
        dir.write_with("trace.csv", |w| trace.write_csv(w))?;
    }
    Ok(())
}
