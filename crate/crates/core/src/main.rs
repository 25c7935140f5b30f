fn main() {
    std::process::exit(xferscope::cli::main());
}
