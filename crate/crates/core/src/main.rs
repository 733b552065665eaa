fn main() {
    std::process::exit(tenspec::cli::run(std::env::args_os()));
}
