fn main() {
    std::process::exit(vmetric::cli::cli_main(std::env::args_os()));
}
