fn main() {
    std::process::exit(power_smc::cli::main());
}
