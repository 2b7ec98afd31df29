fn main() {
    std::process::exit(copeland::cli::run(std::env::args_os()));
}
