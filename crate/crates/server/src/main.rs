fn main() {
    std::process::exit(harmonia_server::cli::run(std::env::args_os()));
}
