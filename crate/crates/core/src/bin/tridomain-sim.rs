fn main() {
    std::process::exit(tridomain::cli::main(std::env::args().collect()));
}
