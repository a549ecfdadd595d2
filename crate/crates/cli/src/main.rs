fn main() {
    std::process::exit(polyglot_cli::run(std::env::args_os()));
}
