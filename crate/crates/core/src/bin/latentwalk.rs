fn main() {
    std::process::exit(latentwalk::cli::main_with_args(std::env::args_os()));
}
