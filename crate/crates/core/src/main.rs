fn main() {
    env_logger::init();
    std::process::exit(pwt_core::cli::main());
}
