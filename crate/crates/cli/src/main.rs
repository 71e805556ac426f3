fn main() {
    std::process::exit(mona_cli::run_cli(std::env::args_os()));
}
