fn main() {
    std::process::exit(mfa_topo::cli::main_with_args(std::env::args_os()));
}
