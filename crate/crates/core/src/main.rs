use std::process::ExitCode;

use clap::Parser;
use mixthresh::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.command.args().quiet;
    match run(&cli.command) {
        Ok(outcome) => {
            if !quiet {
                println!("{}", outcome.message);
                for f in &outcome.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mixthresh: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
