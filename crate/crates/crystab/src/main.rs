fn main() {
    let code = crystab::cli::run(std::env::args().skip(1));
    std::process::exit(code);
}
