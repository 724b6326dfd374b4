use std::process::ExitCode;

use clap::Parser;
use ising_qaoa_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            eprintln!(
                "wrote {} files to {}",
                manifest.outputs.len() + 1,
                cli.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
