fn main() {
    std::process::exit(tastemap_cli::main_with_args(std::env::args_os()));
}
