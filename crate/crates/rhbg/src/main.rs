fn main() {
    std::process::exit(rhbg::cli::run_cli(std::env::args()));
}
