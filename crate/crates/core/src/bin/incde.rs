fn main() {
    std::process::exit(incde::cli::main_with_args(std::env::args_os()));
}
