fn main() {
    std::process::exit(gnsskit::cli::dispatch(std::env::args_os()));
}
