use clap::Parser;

use spacetx::cli::{dispatch, exit_code_for, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code_for(&e));
    }
}
