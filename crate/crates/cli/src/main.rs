mod args;
mod commands;
mod error;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Command::Train(a) => commands::train_cmd(a),
        Command::Planes(a) => commands::planes_cmd(a),
        Command::Classify(a) => commands::classify_cmd(a),
        Command::Cluster(a) => commands::cluster_cmd(a),
        Command::Correlate(a) => commands::correlate_cmd(a),
        Command::Features(a) => commands::features_cmd(a),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
