fn main() {
    std::process::exit(fluxring::cli::run_args());
}
