use std::io::Write;

use ionmem_core::estimation::{fit_quadratic, DataPoint};
use ionmem_core::hyperfine::{field_sensitivity, transition_frequency, DEFAULT_STENCIL_STEP};
use ionmem_core::rng::substream;
use rand_distr::{Distribution, StandardNormal};

use super::{runtime, Report};
use crate::config::LoadedScenario;
use crate::output::OutputDir;
use crate::CliError;

fn grid(center: f64, half_width: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![center],
        n => (0..n).map(|k| center - half_width + 2.0 * half_width * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Transition frequency against field near the operating point.
pub fn cmd_parabola(loaded: &LoadedScenario, seed: u64, dir: &mut OutputDir) -> Result<(), CliError> {
    let (transition, field) = loaded.transition()?;
    let cfg = loaded.section(&loaded.scenario.parabola, "parabola")?;
    let center = cfg.center_t.unwrap_or(field);
    let fields = match &cfg.fields_t {
        Some(f) => f.clone(),
        None => grid(center, cfg.half_width_t, cfg.points),
    };
    if fields.is_empty() {
        return Err(loaded.invalid("parabola needs fields_t or points >= 1"));
    }
    if fields.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
        return Err(loaded.invalid("parabola fields must be finite and >= 0"));
    }
    let c = &loaded.constants;
    let curve: Vec<(f64, f64)> = fields
        .iter()
        .map(|&b| transition_frequency(c, transition, b).map(|nu| (b, nu)))
        .collect::<Result<_, _>>()
        .map_err(runtime)?;
    dir.write_with("parabola.csv", |w| {
        writeln!(w, "B_T,nu_hz")?;
        for (b, nu) in &curve {
            writeln!(w, "{b},{nu}")?;
        }
        Ok(())
    })?;

    if let Some(m) = &cfg.measurement {
        if !(m.field_sigma_t >= 0.0 && m.frequency_sigma_hz > 0.0) {
            return Err(loaded.invalid("parabola.measurement sigmas must be >= 0 (frequency > 0)"));
        }
        let lo = fields.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = fields.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let nominal = grid(0.5 * (lo + hi), 0.5 * (hi - lo), m.points);
        let mut rows = Vec::with_capacity(nominal.len());
        for (k, &b) in nominal.iter().enumerate() {
            let mut rng = substream(seed, &[k as u64]);
            let zb: f64 = StandardNormal.sample(&mut rng);
            let zf: f64 = StandardNormal.sample(&mut rng);
            let actual = (b + m.field_sigma_t * zb).max(0.0);
            let nu = transition_frequency(c, transition, actual).map_err(runtime)? + m.frequency_sigma_hz * zf;
            rows.push((b, nu));
        }
        dir.write_with("measured.csv", |w| {
            writeln!(w, "B_T,B_sigma_T,nu_hz,nu_sigma_hz")?;
            for (b, nu) in &rows {
                writeln!(w, "{b},{},{nu},{}", m.field_sigma_t, m.frequency_sigma_hz)?;
            }
            Ok(())
        })?;
    }

    let sens = field_sensitivity(c, transition, center, DEFAULT_STENCIL_STEP).map_err(runtime)?;
    let mut report = Report::new("quadratic regression of the emitted curve, nu = c0 + c1 (B - B_ref) + c2 (B - B_ref)^2");
    report.value("center_T", center);
    report.value("sensitivity_d1_hz_per_t", sens.d1);
    report.value("sensitivity_quadratic_hz_per_ut2", sens.quadratic_coefficient() * 1e-12);
    if curve.len() >= 3 {
        let points: Vec<DataPoint> = curve.iter().map(|&(b, nu)| DataPoint::new(b, nu, 1.0)).collect();
        let fit = fit_quadratic(&points).map_err(runtime)?;
        report.value("status", "ok");
        report.value("B_ref_T", fit.x_ref);
        report.value("c0_hz", fit.c0.value);
        report.value("c1_hz_per_t", fit.c1.value);
        report.value("c2_hz_per_t2", fit.c2.value);
        report.value("curvature_hz_per_ut2", fit.c2.value * 1e-12);
        report.value("vertex_T", fit.vertex());
    } else {
        report.value("status", "too_few_points_for_fit");
    }
    report.write(dir, "parabola_fit")
}
