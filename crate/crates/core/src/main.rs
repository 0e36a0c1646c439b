fn main() {
    std::process::exit(mpstcheck::cli::main_entry());
}
