fn main() {
    std::process::exit(blocklim::cli::main_entry());
}
