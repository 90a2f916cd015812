fn main() {
    std::process::exit(shiftmix::cli::main_with_args(std::env::args_os()));
}
