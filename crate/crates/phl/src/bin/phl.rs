fn main() {
    std::process::exit(phl::cli::main_with_args(std::env::args_os()));
}
