fn main() {
    std::process::exit(crossdep::cli::run(std::env::args_os()));
}
