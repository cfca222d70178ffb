fn main() {
    std::process::exit(pasdfs_cli::run(std::env::args_os()));
}
