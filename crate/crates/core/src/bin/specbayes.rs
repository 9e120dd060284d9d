fn main() -> std::process::ExitCode {
    specbayes::cli::main()
}
