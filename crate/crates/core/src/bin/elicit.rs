fn main() {
    std::process::exit(elicit::cli::main_with_args(std::env::args_os()));
}
