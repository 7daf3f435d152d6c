fn main() {
    std::process::exit(sparsebm_cli::run(std::env::args_os()));
}
