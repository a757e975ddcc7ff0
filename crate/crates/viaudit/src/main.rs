use clap::Parser;

use viaudit::cli::{self, Cli};

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = cli::run(cli).await {
        eprintln!("viaudit: {e:#}");
        std::process::exit(1);
    }
}
