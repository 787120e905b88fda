fn main() {
    std::process::exit(spotforward_core::cli_io::run_cli(std::env::args_os()));
}
