fn main() { std::process::exit(sracare::cli::run()); }
