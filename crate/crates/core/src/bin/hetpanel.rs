fn main() {
    std::process::exit(hetpanel::cli::main_with(std::env::args_os()));
}
