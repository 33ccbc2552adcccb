fn main() {
    std::process::exit(asmd_cli::run_from(std::env::args_os()));
}
