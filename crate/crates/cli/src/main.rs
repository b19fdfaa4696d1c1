use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = bfree_lab::run(std::env::args_os(), &mut out, &mut std::io::stderr());
    if out.flush().is_err() {
        return ExitCode::from(bfree_lab::EXIT_CONFIG as u8);
    }
    ExitCode::from(code as u8)
}
