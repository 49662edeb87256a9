use clap::Parser;

use perturbscore_cli::{run, Cli, CliError};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().expect("write clap error");
            std::process::exit(code);
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)));
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(CliError::Usage(msg))) => {
            eprintln!("usage error: {msg}");
            1
        }
        Ok(Err(CliError::Data(msg))) => {
            eprintln!("error: {msg}");
            2
        }
        Ok(Err(CliError::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            3
        }
        // a panic is an invariant breach; the panic hook already printed it
        Err(_) => 3,
    };
    std::process::exit(code);
}
