use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = match concentric_cli::run_from(std::env::args_os()) {
        Ok(outcome) => outcome,
        Err(e) => e.exit(),
    };
    match outcome {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("concentric: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
