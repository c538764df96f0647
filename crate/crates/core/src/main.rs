fn main() {
    std::process::exit(semiconv::cli::main_with_args(std::env::args_os()));
}
