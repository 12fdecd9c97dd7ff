fn main() {
    std::process::exit(structural_consensus::cli::run(std::env::args()));
}
