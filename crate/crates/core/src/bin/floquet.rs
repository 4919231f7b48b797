fn main() {
    std::process::exit(floquet_well::cli::run(std::env::args_os()));
}
