fn main() {
    std::process::exit(replab_cli::run(std::env::args_os()));
}
