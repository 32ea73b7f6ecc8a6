//! Command-line front end: compile training data, decode logits, evaluate,
//! simulate panels, check frame budgets and fuse ensembles.

pub mod args;
pub mod commands;
mod io;

pub use args::{Cli, Command};
pub use io::{read_scores, ScoreRecord};

/// Per-item tally of a command run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outcome {
    pub ok: usize,
    pub failed: usize,
    pub skip_bad: bool,
}

impl Outcome {
    /// Success means no per-item failures, or `--skip-bad` with at least one success.
    pub fn success(&self) -> bool {
        self.failed == 0 || (self.skip_bad && self.ok > 0)
    }

    pub fn exit_code(&self) -> i32 {
        if self.success() { 0 } else { 1 }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Compile(args) => commands::compile::run(&args),
        Command::Decode(args) => commands::decode::run(&args),
        Command::Eval(args) => commands::eval::run(&args).map(|_| Outcome { ok: 1, ..Outcome::default() }),
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Budget(args) => commands::budget::run(&args),
        Command::Ensemble(args) => commands::ensemble::run(&args),
    }
}
