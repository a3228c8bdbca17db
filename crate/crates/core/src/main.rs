fn main() {
    std::process::exit(feedback_consensus::cli::run(std::env::args_os()));
}
