fn main() {
    std::process::exit(deformed_ring::cli::main_with_args(std::env::args_os()));
}
