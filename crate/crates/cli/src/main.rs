fn main() {
    std::process::exit(qtwalk_cli::run(std::env::args_os()));
}
