fn main() {
    std::process::exit(reggeon::cli::main_with_args(std::env::args_os()));
}
