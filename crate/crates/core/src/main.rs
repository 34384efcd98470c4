fn main() {
    std::process::exit(regimescope::cli::main());
}
