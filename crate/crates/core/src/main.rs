use clap::Parser;

use catcollapse::harness::{exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", cli.out.join(f).display());
            }
            std::process::exit(exit_code::SUCCESS);
        }
        Err(e) => {
            eprintln!("catcollapse: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
