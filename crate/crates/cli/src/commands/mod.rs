//! The four subcommands. Each reads a loaded scenario, writes its outputs
//! through an [`OutputDir`] and returns normally or with a [`CliError`].

mod clock_scan;
mod dfs;
mod parabola;
mod ramsey;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ionmem_core::estimation::Estimate;

use crate::config::{load_scenario, LoadedScenario};
use crate::output::{ManifestInfo, OutputDir};
use crate::CliError;

pub use clock_scan::cmd_clock_scan;
pub use dfs::cmd_run_dfs;
pub use parabola::cmd_parabola;
pub use ramsey::cmd_run_ramsey;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ClockScan,
    Ramsey,
    Dfs,
    Parabola,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::ClockScan => "clock-scan",
            Self::Ramsey => "ramsey",
            Self::Dfs => "dfs",
            Self::Parabola => "parabola",
        }
    }
}

/// Load `config`, run `command` into `out` and write the manifest.
pub fn run(command: Command, config: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    let loaded = load_scenario(config)?;
    let seed = seed.or(loaded.scenario.seed).unwrap_or(0);
    let mut dir = OutputDir::create(out)?;
    match command {
        Command::ClockScan => cmd_clock_scan(&loaded, &mut dir)?,
        Command::Ramsey => cmd_run_ramsey(&loaded, seed, &mut dir)?,
        Command::Dfs => cmd_run_dfs(&loaded, seed, &mut dir)?,
        Command::Parabola => cmd_parabola(&loaded, seed, &mut dir)?,
    }
    dir.finish(ManifestInfo {
        command: command.name(),
        scenario: &loaded.scenario.name,
        scenario_hash: &loaded.hash,
        seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Plain-text fit report: one `name value sigma` row per parameter, then an
/// optional covariance block.
pub(crate) struct Report {
    text: String,
    csv: String,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Self { text: format!("# {title}\n"), csv: "parameter,value,sigma\n".to_string() }
    }

    pub fn note(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn param(&mut self, name: &str, e: Estimate) {
        let _ = writeln!(self.text, "{name:<16} {} {}", e.value, e.sigma);
        let _ = writeln!(self.csv, "{name},{},{}", e.value, e.sigma);
    }

    pub fn value(&mut self, name: &str, v: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{name:<16} {v}");
        let _ = writeln!(self.csv, "{name},{v},");
    }

    pub fn covariance(&mut self, names: &[&str], rows: &[Vec<f64>]) {
        let _ = writeln!(self.text, "covariance {}", names.join(" "));
        for (n, row) in names.iter().zip(rows) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(self.text, "{n:<16} {}", cells.join(" "));
        }
    }

    pub fn write(self, dir: &mut OutputDir, stem: &str) -> Result<(), CliError> {
        dir.write(&format!("{stem}.txt"), self.text.as_bytes())?;
        dir.write(&format!("{stem}.csv"), self.csv.as_bytes())
    }
}

pub(crate) fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub(crate) fn scenario_name(loaded: &LoadedScenario) -> &str {
    &loaded.scenario.name
}
