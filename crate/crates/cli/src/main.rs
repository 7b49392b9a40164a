fn main() {
    std::process::exit(slspectra_cli::run(std::env::args_os()));
}
