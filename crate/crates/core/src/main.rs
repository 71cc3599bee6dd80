fn main() {
    std::process::exit(setmedian::cli::run(std::env::args_os()));
}
