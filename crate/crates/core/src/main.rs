use env_logger::Env;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("CRANE_CTL_LOG", "warn")).init();
    std::process::exit(crane_core::cli::main_with_args(std::env::args_os()));
}
