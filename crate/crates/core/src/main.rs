fn main() {
    std::process::exit(factlab::cli::run());
}
