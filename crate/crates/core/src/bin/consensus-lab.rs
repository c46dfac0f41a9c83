fn main() {
    std::process::exit(consensus_lab::cli::run(std::env::args_os()));
}
