fn main() {
    std::process::exit(hubbard_shells::cli::main_with_args(std::env::args_os()));
}
