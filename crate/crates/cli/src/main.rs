use clap::{CommandFactory, Parser};
use dtr_cli::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                std::process::exit(0);
            }
            let rendered = e.render().to_string();
            if !rendered.contains("Usage:") {
                let mut cmd = Cli::command();
                cmd.build();
                let sub = std::env::args().nth(1).and_then(|name| cmd.find_subcommand_mut(&name).map(|s| s.render_usage()));
                eprintln!("\n{}", sub.unwrap_or_else(|| Cli::command().render_usage()));
            }
            std::process::exit(1);
        }
    };
    std::process::exit(dtr_cli::run(cli));
}
