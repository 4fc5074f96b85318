fn main() {
    std::process::exit(elliptic_cli::main_with_args(std::env::args_os()));
}
