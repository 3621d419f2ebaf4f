use std::path::PathBuf;

use clap::Parser;
use lespectra::cli::{run, RunArgs, Task};

/// Principal half-eigenvalues, spectral curves and maximum-principle scans
/// for fully nonlinear Lane-Emden systems.
#[derive(Parser)]
#[command(name = "lespectra", version)]
struct Args {
    task: Task,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() {
    let a = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(&RunArgs {
        task: a.task,
        config: a.config,
        out: a.out,
        seed: a.seed,
    }));
}
