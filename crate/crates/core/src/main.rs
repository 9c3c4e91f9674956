fn main() {
    std::process::exit(inspection_game::cli::run(std::env::args_os()));
}
