use clap::Parser;
use greedvmaf_cli::args::Cli;
use greedvmaf_cli::{commands, run};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        // Library errors already embed their cause, so skip repeats.
        let mut message = err.to_string();
        for cause in err.chain().skip(1) {
            let text = cause.to_string();
            if !message.contains(&text) {
                message = format!("{message}: {text}");
            }
        }
        eprintln!("error: {message}");
        std::process::exit(commands::exit_code(&err));
    }
}
