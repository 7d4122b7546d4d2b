fn main() {
    std::process::exit(twinsync_cli::run_from(std::env::args_os()));
}
