fn main() {
    std::process::exit(dirichlet_control::cli::run(std::env::args_os()));
}
