fn main() {
    std::process::exit(multiplex_core::harness::cli::run(std::env::args_os()));
}
