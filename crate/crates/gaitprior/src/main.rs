use clap::Parser;
use gaitprior::cli::{run, CliConfig};

fn main() {
    let cli = CliConfig::parse();
    match run(&cli) {
        Ok(summary) => println!("{summary}"),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
