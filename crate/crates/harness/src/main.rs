fn main() {
    std::process::exit(missbench::cli::main_with_args(std::env::args_os()));
}
