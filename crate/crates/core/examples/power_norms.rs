//! Norms of powers of the error propagation operator on overlapping strips,
//! computed through the block impedance-to-impedance operator.
//!
//! `cargo run --release --example power_norms -- [k] [strips] [max power]`

use helmholtz_oras::decomp::{build_pou, strips};
use helmholtz_oras::experiments::strip_problem;
use helmholtz_oras::impmaps::StripImpedance;
use helmholtz_oras::oras::build_preconditioner;

fn main() -> helmholtz_oras::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let k: f64 = args.first().map_or(10.0, |s| s.parse().expect("k"));
    let n: usize = args.get(1).map_or(4, |s| s.parse().expect("strips"));
    let max_power: usize = args.get(2).map_or(2 * n, |s| s.parse().expect("max power"));
    let (length, overlap) = (2.0 * n as f64 / 3.0, 0.5 * 2.0 / 3.0);
    let h = 2.0 * std::f64::consts::PI / (10.0 * k);
    let problem = strip_problem(k, 1, h, length, n, overlap)?;
    let decomp = strips(&problem.space, n, overlap)?;
    let pou = build_pou(&problem.space, &decomp)?;
    let prec = build_preconditioner(&problem, decomp, pou)?;
    let imp = StripImpedance::new(&problem, &prec)?;
    let block = imp.block_operator()?;
    println!("k = {k}, {n} strips, {} dofs, impedance space dimension {}", problem.ndof(), block.dim());
    for (i, v) in block.power_norms(max_power)?.iter().enumerate() {
        println!("||T^{:<2}|| = {v:.4e}{}", i + 1, if *v < 1.0 { "  < 1" } else { "" });
    }
    Ok(())
}
