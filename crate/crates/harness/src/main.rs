fn main() {
    if let Err(e) = smcsmooth_harness::cli::run(std::env::args_os()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
