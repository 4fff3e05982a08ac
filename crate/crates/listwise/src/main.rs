fn main() {
    std::process::exit(listwise::cli::run(std::env::args_os()));
}
