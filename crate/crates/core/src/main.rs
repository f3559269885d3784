fn main() {
    std::process::exit(exact_uncertainty::cli::run(std::env::args_os()));
}
