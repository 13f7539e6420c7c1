use std::io::Write;

use ionmem_core::hyperfine::{enumerate_clock_fields, ClockStatus};

use super::runtime;
use crate::config::LoadedScenario;
use crate::output::OutputDir;
use crate::CliError;

/// Clock points of every transition in the configured field range.
pub fn cmd_clock_scan(loaded: &LoadedScenario, dir: &mut OutputDir) -> Result<(), CliError> {
    let scan = loaded.section(&loaded.scenario.scan, "scan")?;
    let [lo, hi] = scan.field_range_t;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0) {
        return Err(loaded.invalid("scan.field_range_t must be finite with lower bound >= 0"));
    }
    if !(scan.grid_step_t > 0.0 && scan.grid_step_t.is_finite()) {
        return Err(loaded.invalid("scan.grid_step_t must be > 0"));
    }
    let points = enumerate_clock_fields(&loaded.constants, (lo, hi), scan.grid_step_t).map_err(runtime)?;

    dir.write_with("clock_points.csv", |w| {
        writeln!(w, "lowerF,lowerMF,upperF,upperMF,clock_field_T,f0_hz,d2_hz_per_t2")?;
        for p in &points {
            let t = p.transition;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                t.lower.f, t.lower.m_f, t.upper.f, t.upper.m_f, p.field, p.f0, p.d2
            )?;
        }
        Ok(())
    })?;
    dir.write_with("sensitivity_table.csv", |w| {
        writeln!(w, "lowerF,lowerMF,upperF,upperMF,clock_field_T,d1_hz_per_t,quadratic_hz_per_ut2,status")?;
        for p in &points {
            let status = match p.status {
                ClockStatus::Converged => "converged",
                ClockStatus::NoiseFloor => "noise_floor",
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                p.transition.lower.f,
                p.transition.lower.m_f,
                p.transition.upper.f,
                p.transition.upper.m_f,
                p.field,
                p.d1,
                0.5 * p.d2 * 1e-12,
                status
            )?;
        }
        Ok(())
    })
}
