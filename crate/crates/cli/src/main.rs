fn main() {
    std::process::exit(odss_cli::main_with_std());
}
