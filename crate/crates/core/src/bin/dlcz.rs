fn main() {
    std::process::exit(dlcz::cli::main_with_args(std::env::args_os()));
}
