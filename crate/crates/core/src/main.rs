fn main() {
    std::process::exit(copula_cm::cli::run(std::env::args_os()));
}
