fn main() {
    std::process::exit(seedevo::cli::main());
}
