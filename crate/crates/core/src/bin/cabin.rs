fn main() {
    std::process::exit(cabin::cli::main_with_args(std::env::args_os()));
}
