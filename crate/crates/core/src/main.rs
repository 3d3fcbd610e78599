fn main() {
    std::process::exit(paraqube::cli::dispatch(std::env::args_os()));
}
