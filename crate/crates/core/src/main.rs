fn main() {
    std::process::exit(covcp::cli::main_with_args(std::env::args_os()));
}
