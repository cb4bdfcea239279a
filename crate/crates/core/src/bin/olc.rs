fn main() {
    std::process::exit(olc_core::cli::cli_main(std::env::args_os()));
}
