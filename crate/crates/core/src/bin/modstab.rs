fn main() {
    std::process::exit(modstab::cli::main());
}
