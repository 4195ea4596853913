fn main() -> std::process::ExitCode {
    vecscope::cli::main_with_args(std::env::args_os())
}
