use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = abcdose_cli::Cli::parse();
    match abcdose_cli::run(cli) {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code().into()
        }
    }
}
