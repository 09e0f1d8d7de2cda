fn main() {
    std::process::exit(pefkit::cli::run(std::env::args_os()));
}
