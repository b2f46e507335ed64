fn main() {
    std::process::exit(sav_cli::main_with_args(std::env::args_os()));
}
