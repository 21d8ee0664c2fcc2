fn main() {
    std::process::exit(kinsyn::cli::run(std::env::args_os()));
}
