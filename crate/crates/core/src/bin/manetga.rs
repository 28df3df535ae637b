fn main() {
    std::process::exit(manetga::cli::main_with_args(std::env::args_os()));
}
