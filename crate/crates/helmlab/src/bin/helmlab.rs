fn main() {
    std::process::exit(helmlab::cli::main());
}
