fn main() {
    std::process::exit(ensemble_heat::harness::cli_main(std::env::args_os()));
}
