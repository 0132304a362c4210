fn main() {
    std::process::exit(twoconf::cli::main_with(std::env::args_os()));
}
