fn main() {
    std::process::exit(pathwise::cli::run(std::env::args_os()));
}
