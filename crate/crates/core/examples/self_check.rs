//! Runs the structural self-checks on small strip problems and prints one
//! line per check.
//!
//! `cargo run --release --example self_check -- [seed]`

use helmholtz_oras::verify::run_verify;

fn main() -> helmholtz_oras::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let report = run_verify(seed)?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    println!("{}", if report.passed() { "all checks passed" } else { "some checks FAILED" });
    Ok(())
}
