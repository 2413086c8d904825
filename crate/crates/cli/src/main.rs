use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let seed_env = std::env::var(kyp_cli::SEED_ENV).ok();
    let outcome = kyp_cli::run_args(std::env::args_os(), seed_env);
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(outcome.stdout.as_bytes()).and_then(|()| stdout.flush()).is_err() {
        return ExitCode::from(kyp_cli::EXIT_ERROR as u8);
    }
    ExitCode::from(outcome.code as u8)
}
