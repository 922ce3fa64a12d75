fn main() -> std::process::ExitCode {
    insdvl::cli::main_with_args(std::env::args_os())
}
