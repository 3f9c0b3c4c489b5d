use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use spinsearch::Command;

#[derive(Parser)]
#[command(name = "spinsearch", version, about = "NMR ensemble search and spectroscopy simulator")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match spinsearch::run(args.command, &args.config, &args.out) {
        Ok(report) => {
            println!("{}: wrote {}", report.command, args.out.join("report.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
