fn main() {
    std::process::exit(linkcoref_cli::run(std::env::args_os()));
}
