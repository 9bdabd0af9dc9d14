fn main() -> std::process::ExitCode {
    nc_embed::cli::main()
}
