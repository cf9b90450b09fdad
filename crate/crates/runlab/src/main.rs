fn main() {
    std::process::exit(xferlab::cli::main_with_args(std::env::args_os()));
}
