fn main() {
    std::process::exit(spvox::toolkit::cli::main_entry());
}
