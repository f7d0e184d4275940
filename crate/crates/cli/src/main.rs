fn main() {
    std::process::exit(capmeter::run(std::env::args_os()));
}
