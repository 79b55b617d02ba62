use clap::Parser;
use csl_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CSL_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("csl: error: {e}");
        std::process::exit(e.exit_code());
    }
}
