fn main() {
    std::process::exit(stridephase::cli::run(std::env::args_os()));
}
