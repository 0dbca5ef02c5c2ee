fn main() {
    // unlocked handles: worker threads may report progress on stderr
    let code = circ_manova::cli::run(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
