fn main() {
    std::process::exit(toric_cli::main_with(std::env::args_os()));
}
