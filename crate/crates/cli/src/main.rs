fn main() {
    std::process::exit(rmsched_cli::app::run(std::env::args_os()));
}
