fn main() {
    std::process::exit(tailfolio_cli::run(std::env::args_os()));
}
