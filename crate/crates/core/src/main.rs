fn main() {
    std::process::exit(bfexact::cli::run_from(std::env::args_os()));
}
