fn main() {
    std::process::exit(glx_cli::run(std::env::args_os()));
}
