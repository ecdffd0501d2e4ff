fn main() {
    std::process::exit(nonlocal_claw::cli::main_with_args(std::env::args_os()));
}
