fn main() {
    std::process::exit(carl_core::cli::main(std::env::args_os()));
}
