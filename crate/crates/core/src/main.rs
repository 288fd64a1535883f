fn main() {
    std::process::exit(thermoscan::cli::run(std::env::args_os()));
}
