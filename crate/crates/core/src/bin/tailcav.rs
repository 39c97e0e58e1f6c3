fn main() -> std::process::ExitCode {
    tailcav::cli::main()
}
