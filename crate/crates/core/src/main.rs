fn main() {
    std::process::exit(cocycle_lab::cli::run(std::env::args_os()));
}
