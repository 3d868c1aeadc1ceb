fn main() {
    std::process::exit(loewner_lab::run(std::env::args_os()));
}
