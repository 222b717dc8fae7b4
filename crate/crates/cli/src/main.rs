use std::process::ExitCode;

use semiconj::{parse_args, run, UsageError};

fn main() -> ExitCode {
    let config = match parse_args(std::env::args_os().skip(1)) {
        Ok(c) => c,
        Err(UsageError::Display(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(UsageError::Invalid(msg)) => {
            let first = msg.lines().next().unwrap_or_default();
            eprintln!("semiconj: {first}");
            return ExitCode::from(2);
        }
    };
    ExitCode::from(run(&config) as u8)
}
