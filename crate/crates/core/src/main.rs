fn main() {
    std::process::exit(transform_orders::cli::main_with(std::env::args_os()));
}
