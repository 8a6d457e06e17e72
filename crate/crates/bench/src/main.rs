fn main() {
    std::process::exit(psga_bench::cli::main_with_args(std::env::args_os()));
}
