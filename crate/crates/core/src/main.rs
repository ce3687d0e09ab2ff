use clap::Parser;

use flatcouple::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
