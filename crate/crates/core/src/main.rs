fn main() {
    std::process::exit(binauth::cli::run(std::env::args_os()));
}
