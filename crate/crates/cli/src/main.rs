fn main() {
    std::process::exit(skinloc_cli::run(std::env::args_os()));
}
