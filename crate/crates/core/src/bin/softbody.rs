use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SOFTBODY_LOG", "warn")).init();
    softbody::cli::main_with_args(std::env::args())
}
