fn main() {
    std::process::exit(mcinfer::cli::run(std::env::args_os()));
}
