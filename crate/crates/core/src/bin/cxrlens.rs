fn main() {
    std::process::exit(cxrlens::cli::run_from(std::env::args_os()));
}
