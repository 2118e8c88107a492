fn main() {
    std::process::exit(dflab::cli::main_exit_code());
}
