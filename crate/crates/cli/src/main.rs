fn main() {
    std::process::exit(cfcover_cli::main_entry());
}
