use std::process::ExitCode;

use tomoboost::cli::{parse_args, run, CliError};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let result = parse_args(&argv).and_then(|cli| run(cli).map_err(CliError::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) if !e.use_stderr() => {
            let _ = e.print();
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(e)) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            ExitCode::from(2)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
