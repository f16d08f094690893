use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = stse_cli::Cli::parse();
    let code = stse_cli::run(cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
