fn main() {
    std::process::exit(safegrid::cli::main_with_args(std::env::args_os()));
}
