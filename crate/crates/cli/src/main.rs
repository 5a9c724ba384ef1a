use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = chordlab_cli::Args::parse();
    ExitCode::from(chordlab_cli::run(&args) as u8)
}
