fn main() {
    std::process::exit(slice_grav::cli::run(std::env::args_os()));
}
