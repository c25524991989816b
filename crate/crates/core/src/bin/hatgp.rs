fn main() {
    std::process::exit(hatgp::cli::main_with_args(std::env::args_os()));
}
