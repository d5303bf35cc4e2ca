fn main() {
    std::process::exit(elicit::cli::main());
}
