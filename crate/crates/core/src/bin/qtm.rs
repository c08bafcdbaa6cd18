fn main() {
    std::process::exit(qtm::cli::run(std::env::args_os()));
}
