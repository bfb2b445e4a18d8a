fn main() {
    std::process::exit(adsgamma::cli::run_from(std::env::args_os()));
}
