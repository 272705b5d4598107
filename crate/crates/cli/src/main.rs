use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bnlab_harness::main_with(std::env::args_os()))
}
