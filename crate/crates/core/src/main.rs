fn main() {
    std::process::exit(satclique::cli::run());
}
