fn main() {
    std::process::exit(scev::cli::run(std::env::args_os()));
}
