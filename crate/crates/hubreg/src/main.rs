fn main() {
    std::process::exit(hubreg::cli::run(std::env::args_os()));
}
