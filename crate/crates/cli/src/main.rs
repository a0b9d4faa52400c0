use clap::Parser;

use fallbench_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("fallbench: {e}");
        std::process::exit(e.exit_code());
    }
}
