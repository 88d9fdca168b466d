fn main() {
    std::process::exit(uvforge::cli::main(std::env::args_os()));
}
