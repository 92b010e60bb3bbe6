fn main() {
    std::process::exit(masquerade_cli::dispatch(std::env::args_os()));
}
