fn main() -> std::process::ExitCode {
    canham_cli::main_with_args(std::env::args_os())
}
