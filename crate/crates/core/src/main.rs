fn main() { std::process::exit(gausscap::cli::run(std::env::args().collect())); }
