fn main() {
    std::process::exit(pullsim::cli::run(std::env::args_os()));
}
