fn main() {
    std::process::exit(ldc_cli::run(std::env::args_os()));
}
