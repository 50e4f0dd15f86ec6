fn main() -> std::process::ExitCode {
    globcert_cli::app::main_with(std::env::args_os())
}
