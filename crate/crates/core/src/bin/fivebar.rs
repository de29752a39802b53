fn main() {
    std::process::exit(fivebar::cli::run(std::env::args_os()));
}
