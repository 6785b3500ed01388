fn main() -> std::process::ExitCode {
    gaitxai_cli::main_with_args(std::env::args_os())
}
