fn main() {
    std::process::exit(spde_lab_cli::run(std::env::args_os()));
}
