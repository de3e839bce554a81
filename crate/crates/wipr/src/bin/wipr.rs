fn main() {
    std::process::exit(wipr::cli::run());
}
