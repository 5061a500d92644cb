fn main() {
    std::process::exit(charform::cli::run(std::env::args_os()));
}
