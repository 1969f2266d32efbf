fn main() {
    std::process::exit(uil::cli::run(std::env::args_os()));
}
