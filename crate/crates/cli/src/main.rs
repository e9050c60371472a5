fn main() {
    std::process::exit(anyembed_cli::main_with_args(std::env::args_os()));
}
