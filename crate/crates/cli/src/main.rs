use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(graspgen::run(std::env::args_os()))
}
