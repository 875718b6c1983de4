fn main() {
    std::process::exit(conformal_poisson_cli::run(std::env::args_os()));
}
