use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use qctrl_cli::args::Cli;
use qctrl_cli::commands::run;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            if !out.stdout.is_empty() {
                let _ = writeln!(std::io::stdout().lock(), "{}", out.stdout.trim_end());
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
