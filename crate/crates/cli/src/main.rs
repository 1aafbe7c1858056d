use clap::Parser;
use pqk_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = pqk_cli::run(&cli) {
        eprintln!("pqk: {e}");
        std::process::exit(e.exit_code());
    }
}
