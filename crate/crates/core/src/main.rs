fn main() {
    std::process::exit(thin_annuli::cli::run(std::env::args_os()));
}
