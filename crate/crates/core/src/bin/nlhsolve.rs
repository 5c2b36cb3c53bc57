fn main() {
    // placeholder while the pipeline modules land
    eprintln!("not wired up yet");
    std::process::exit(3);
}
