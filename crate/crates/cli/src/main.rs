fn main() {
    std::process::exit(ribbonlim_cli::run(std::env::args_os().collect()));
}
