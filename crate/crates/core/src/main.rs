fn main() {
    std::process::exit(expweight::cli::main_with_args(std::env::args_os()));
}
