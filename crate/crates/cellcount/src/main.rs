fn main() {
    std::process::exit(cellcount::cli::main_with_args(std::env::args_os()));
}
