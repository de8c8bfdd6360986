use std::process::ExitCode;

fn main() -> ExitCode {
    let code = parascan_cli::cli::run(std::env::args_os(), &parascan_cli::SystemClock, &mut std::io::stdout().lock());
    ExitCode::from(code)
}
