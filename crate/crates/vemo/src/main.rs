fn main() {
    std::process::exit(vemo::cli::run());
}
