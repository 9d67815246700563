fn main() {
    std::process::exit(oneway_cqed::cli::run(std::env::args_os()));
}
