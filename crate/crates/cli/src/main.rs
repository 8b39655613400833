fn main() {
    std::process::exit(qbank_cli::run(std::env::args_os()));
}
