use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helmholtz_oras::experiments::{run, Experiment, HRule, RunConfig};
use helmholtz_oras::verify::run_verify;

#[derive(Parser)]
#[command(name = "oras", version, about = "Helmholtz ORAS experiments and self-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical map norms against a fine reference mesh.
    ImpmapConvergence(RunArgs),
    /// Canonical map norms as the output line moves.
    ImpmapDelta(RunArgs),
    /// Iteration counts on overlapping strips.
    Strips(RunArgs),
    /// Iteration counts on a checkerboard of the unit square.
    Checkerboard(RunArgs),
    /// Norms of powers of the error propagation on strips.
    Tnorm(RunArgs),
    /// Structural self-checks; exits with status 1 on failure.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write `verify.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    /// e.g. `2pi/10k`, `1/2k`, `80^-1.25`, `0.01`
    #[arg(long)]
    h_rule: Option<HRule>,
    /// Refinements of the h rule, each halving h.
    #[arg(long, value_delimiter = ',')]
    h_levels: Option<Vec<u32>>,
    /// Reference mesh-size rule for impmap-convergence.
    #[arg(long)]
    h_ref_rule: Option<HRule>,
    #[arg(long)]
    n_subdomains: Option<usize>,
    #[arg(long)]
    overlap: Option<f64>,
    /// x-extent of the rectangle.
    #[arg(long)]
    length: Option<f64>,
    /// Output-line distance for impmap-convergence.
    #[arg(long)]
    delta: Option<f64>,
    /// Largest power for tnorm.
    #[arg(long)]
    max_power: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    #[arg(long)]
    guard_threshold: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lift the desk caps (k <= 40, h >= 2pi/(10k)/4).
    #[arg(long)]
    full: bool,
}

impl RunArgs {
    fn config(self, experiment: Experiment) -> (RunConfig, PathBuf) {
        let d = RunConfig::defaults(experiment);
        let cfg = RunConfig {
            k: self.k.unwrap_or(d.k),
            p: self.p.unwrap_or(d.p),
            h_rule: self.h_rule.unwrap_or(d.h_rule),
            h_levels: self.h_levels.unwrap_or(d.h_levels),
            h_ref_rule: self.h_ref_rule.unwrap_or(d.h_ref_rule),
            n_subdomains: self.n_subdomains.unwrap_or(d.n_subdomains),
            overlap: self.overlap.unwrap_or(d.overlap),
            length: self.length.unwrap_or(d.length),
            delta: self.delta.unwrap_or(d.delta),
            max_power: self.max_power.unwrap_or(d.max_power),
            tolerance: self.tol.unwrap_or(d.tolerance),
            max_iterations: self.maxit.unwrap_or(d.max_iterations),
            guard_threshold: self.guard_threshold.unwrap_or(d.guard_threshold),
            seed: self.seed,
            full: self.full,
            experiment,
        };
        (cfg, self.out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::ImpmapConvergence(a) => (Experiment::ImpmapConvergence, a),
        Command::ImpmapDelta(a) => (Experiment::ImpmapDelta, a),
        Command::Strips(a) => (Experiment::Strips, a),
        Command::Checkerboard(a) => (Experiment::Checkerboard, a),
        Command::Tnorm(a) => (Experiment::Tnorm, a),
        Command::Verify { seed, out } => return verify(seed, out),
    };
    let (cfg, out) = args.config(experiment);
    let result = run(&cfg).and_then(|t| t.write(&out).map(|_| t));
    match result {
        Ok(table) => {
            for w in table.meta.warnings.iter().chain(&table.meta.skipped) {
                eprintln!("warning: {w}");
            }
            print!("{}", table.csv_string().unwrap_or_default());
            eprintln!("wrote {}/table.csv and {}/meta.json", out.display(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn verify(seed: u64, out: Option<PathBuf>) -> ExitCode {
    let report = match run_verify(seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for c in &report.checks {
        println!("{}", c.line());
    }
    if let Some(dir) = out {
        let json = serde_json::to_string_pretty(&report).expect("report serialises");
        if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("verify.json"), json + "\n")) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
