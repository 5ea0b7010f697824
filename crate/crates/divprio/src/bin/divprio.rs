use std::io::Write;

fn main() {
    // Route library warnings (short sources, suspect distance values) to
    // standard error; RUST_LOG controls verbosity.
    let filters = std::env::var("RUST_LOG").unwrap_or_else(|_| "warn".to_string());
    let _ = env_logger::Builder::new()
        .parse_filters(&filters)
        .format(|buf, record| writeln!(buf, "{}: {}", record.level(), record.args()))
        .try_init();

    std::process::exit(divprio::cli::run(std::env::args_os()));
}
