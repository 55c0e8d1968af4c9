fn main() {
    std::process::exit(wavebeam::cli::main());
}
