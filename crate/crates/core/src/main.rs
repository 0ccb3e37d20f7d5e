fn main() {
    std::process::exit(mmot::cli::run(std::env::args_os()));
}
