fn main() {
    std::process::exit(markrefine::cli::run(std::env::args_os()));
}
