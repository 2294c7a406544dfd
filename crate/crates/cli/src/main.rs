use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use wickfock_cli::{dispatch, RunConfig};

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    match dispatch(&cfg) {
        Ok(report) => {
            eprintln!("{}", report.metadata_line());
            let mut out = std::io::stdout().lock();
            if out
                .write_all(report.stdout().as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
