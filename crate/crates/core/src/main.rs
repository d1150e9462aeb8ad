fn main() {
    std::process::exit(tripod_eit::cli::dispatch(std::env::args_os()));
}
