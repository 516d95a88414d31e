fn main() {
    std::process::exit(archbot_cli::cli::run_main(std::env::args_os()));
}
