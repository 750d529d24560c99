fn main() {
    std::process::exit(linksim_cli::cli_main(std::env::args_os()));
}
