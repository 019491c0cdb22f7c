fn main() {
    std::process::exit(permstat::cli::main());
}
