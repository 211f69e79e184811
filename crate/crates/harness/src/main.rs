use clap::Parser;
use ptdilate_harness::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(&cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
