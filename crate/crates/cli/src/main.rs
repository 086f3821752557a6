use std::io;
use std::process::ExitCode;

use troupe::actions::stdio_console;

fn main() -> ExitCode {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = troupe_cli::run_cli(
        std::env::args_os(),
        stdio_console(),
        &mut stdout.lock(),
        &mut stderr.lock(),
    );
    ExitCode::from(code.clamp(0, 255) as u8)
}
