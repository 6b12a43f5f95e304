fn main() {
    std::process::exit(vaa_observer::simulator::cli::cli_main(std::env::args_os()));
}
