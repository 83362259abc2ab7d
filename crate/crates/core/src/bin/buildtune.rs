fn main() {
    std::process::exit(buildtune::cli::main_with_env());
}
