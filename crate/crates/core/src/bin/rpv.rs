fn main() -> std::process::ExitCode {
    rpv::cli::main()
}
