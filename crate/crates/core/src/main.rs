fn main() {
    std::process::exit(rectherz::cli::run(std::env::args_os()));
}
