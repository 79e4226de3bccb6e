fn main() {
    std::process::exit(davidson_luce::cli::run());
}
