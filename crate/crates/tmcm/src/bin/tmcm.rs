fn main() {
    std::process::exit(tmcm::cli::run_cli(std::env::args_os()));
}
