fn main() {
    std::process::exit(edp::cli::run());
}
