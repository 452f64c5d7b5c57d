//! Canonical map norms on successively refined meshes against a fine
//! reference mesh, written as CSV.
//!
//! `cargo run --release --example impmap_convergence -- [k]`

use helmholtz_oras::experiments::{run_impmap_convergence, Experiment, RunConfig};

fn main() -> helmholtz_oras::Result<()> {
    let k: f64 = std::env::args().nth(1).map_or(6.0, |s| s.parse().expect("k"));
    let cfg = RunConfig {
        k: vec![k],
        h_levels: vec![0, 1, 2],
        h_ref_rule: "1/16k".parse()?,
        ..RunConfig::defaults(Experiment::ImpmapConvergence)
    };
    let table = run_impmap_convergence(&cfg)?;
    print!("{}", table.csv_string()?);
    for w in &table.meta.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
