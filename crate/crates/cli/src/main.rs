fn main() {
    std::process::exit(cnls_cli::run_cli(std::env::args_os()));
}
