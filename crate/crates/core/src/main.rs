fn main() {
    std::process::exit(centralab::cli::dispatch(std::env::args_os()));
}
