fn main() {
    std::process::exit(lungtex_cli::run(std::env::args_os()));
}
