fn main() {
    std::process::exit(regcalc::cli::run(std::env::args().collect()));
}
