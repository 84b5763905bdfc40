fn main() -> std::process::ExitCode {
    conpt::cli::run(std::env::args_os())
}
