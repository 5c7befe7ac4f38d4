//! Command-line front end for [`topicbp`]: see the `topicbp` binary.

pub mod args;
pub mod commands;
pub mod io;

use anyhow::Result;

pub fn dispatch(cli: &args::Cli) -> Result<()> {
    match &cli.command {
        args::Command::Train(a) => commands::cmd_train(a),
        args::Command::GenSynthetic(a) => commands::cmd_gen_synthetic(a),
        args::Command::Perplexity(a) => commands::cmd_perplexity(a),
    }
}
