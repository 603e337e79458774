fn main() {
    std::process::exit(condforest_cli::run(std::env::args_os()));
}
