//! Driver library behind the `spinsearch` binary.
//!
//! Each command reads a JSON config, writes `report.json` plus any CSV
//! tables into the output directory, and returns the report. Wall-clock
//! time goes to `timing.json` so the other outputs stay byte-identical
//! between runs.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod selftest;

use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;

pub use error::CliError;
pub use report::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Search,
    GroverScan,
    Spectrum,
    ComposeBench,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Search => "search",
            Command::GroverScan => "grover-scan",
            Command::Spectrum => "spectrum",
            Command::ComposeBench => "compose-bench",
            Command::Selftest => "selftest",
        }
    }
}

pub fn run(command: Command, config_path: &Path, out_dir: &Path) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let report = match command {
        Command::Search => commands::cmd_search(&config::load(config_path)?)?,
        Command::GroverScan => commands::cmd_grover_scan(&config::load(config_path)?, out_dir)?,
        Command::Spectrum => commands::cmd_spectrum(&config::load(config_path)?, out_dir)?,
        Command::ComposeBench => {
            commands::cmd_compose_bench(&config::load(config_path)?, out_dir)?
        }
        Command::Selftest => selftest::run(&config::load(config_path)?)?,
    };
    report.write(out_dir)?;
    let elapsed = start.elapsed().as_secs_f64();
    let timing = serde_json::json!({ "command": command.name(), "wall_seconds": elapsed });
    std::fs::write(out_dir.join("timing.json"), timing.to_string() + "\n")?;
    eprintln!("{} finished in {elapsed:.3} s", command.name());
    Ok(report)
}
