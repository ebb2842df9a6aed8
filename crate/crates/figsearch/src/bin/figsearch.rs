fn main() {
    std::process::exit(figsearch::cli::run(std::env::args()));
}
