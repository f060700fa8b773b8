fn main() {
    std::process::exit(upconv::cli::main());
}
