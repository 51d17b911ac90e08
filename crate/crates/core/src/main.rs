fn main() {
    let code = threadgrid::cli::run(std::env::args_os());
    std::process::exit(code);
}
