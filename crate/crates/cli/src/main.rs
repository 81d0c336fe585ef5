use clap::Parser;
use imflow_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IMFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match run(&cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("imflow {}: {e}", cli.command.name());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
