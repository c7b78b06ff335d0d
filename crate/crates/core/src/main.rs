fn main() {
    std::process::exit(release_gate::cli::main());
}
