fn main() {
    std::process::exit(snmono::cli::run(std::env::args_os()));
}
