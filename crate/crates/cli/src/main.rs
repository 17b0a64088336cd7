use std::process::exit;

use clap::error::ErrorKind;
use clap::Parser;

use breakout_cli::{config, pipeline};

fn main() {
    let cli = match config::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            exit(0);
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(pipeline::EXIT_CONFIG);
        }
    };
    let cfg = match config::validate(cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            exit(pipeline::EXIT_CONFIG);
        }
    };
    match pipeline::run(&cfg) {
        Ok(table) => print!("{table}"),
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code());
        }
    }
}
