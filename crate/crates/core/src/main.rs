fn main() {
    std::process::exit(grantfree::cli::main());
}
