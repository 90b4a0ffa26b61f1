fn main() {
    std::process::exit(sociolex::cli::run(std::env::args_os()));
}
