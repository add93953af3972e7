fn main() {
    std::process::exit(sfcqmc::cli::run(std::env::args_os()));
}
