fn main() {
    std::process::exit(smallcell_cli::run(std::env::args_os()));
}
