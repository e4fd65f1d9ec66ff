fn main() -> std::process::ExitCode {
    swarm_sa::cli::main_with_args(std::env::args_os())
}
