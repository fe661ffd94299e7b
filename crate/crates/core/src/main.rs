fn main() {
    std::process::exit(diqkd_cc::cli::main());
}
