fn main() {
    std::process::exit(avbind::cli::main_with_args(std::env::args_os()));
}
