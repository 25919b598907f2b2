fn main() {
    std::process::exit(calderon::cli::main());
}
