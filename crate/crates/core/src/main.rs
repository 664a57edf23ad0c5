fn main() {
    std::process::exit(proxyskill::cli::main_with_args(std::env::args_os()));
}
