use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    synthaudit_cli::run(&synthaudit_cli::Cli::parse())
}
