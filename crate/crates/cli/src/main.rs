fn main() {
    std::process::exit(csgm_cli::args::main_with_args(std::env::args_os()));
}
