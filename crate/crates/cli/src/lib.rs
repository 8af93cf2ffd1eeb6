//! Command implementations behind the `greedvmaf` binary.

pub mod args;
mod cache;
pub mod commands;
mod input;

use anyhow::Result;

use args::{Cli, Command};

/// Configures the worker pool and runs one parsed invocation.
pub fn run(cli: &Cli) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    if cli.jobs.is_some_and(|j| j > 1) {
        log::warn!("built without the parallel feature; --jobs is ignored");
    }
    match &cli.command {
        Command::Features(a) => commands::cmd_features(a),
        Command::Train(a) => commands::cmd_train(a).map(drop),
        Command::Predict(a) => commands::cmd_predict(a).map(drop),
        Command::Evaluate(a) => commands::cmd_evaluate(a).map(drop),
        Command::Psnr(a) => commands::cmd_psnr(a).map(drop),
    }
}
