fn main() {
    std::process::exit(kymh::cli::run_cli(std::env::args_os()));
}
