fn main() {
    std::process::exit(nsw_cli::main_with(std::env::args_os()));
}
