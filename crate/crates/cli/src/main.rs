fn main() {
    std::process::exit(exfact_cli::run(std::env::args_os()));
}
