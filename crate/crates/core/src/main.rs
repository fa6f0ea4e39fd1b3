fn main() {
    std::process::exit(acbug::cli::run(std::env::args_os()));
}
