//! Checkerboard decomposition of the unit square with `⌈k^0.4⌉` parts per
//! side, extended by a quarter of the part size: ORAS-preconditioned
//! Richardson and GMRES iteration counts.
//!
//! `cargo run --release --example checkerboard_solve -- [k] [p] [parts] [radius/part]`

use helmholtz_oras::assembly::{assemble_global, plane_wave_load};
use helmholtz_oras::decomp::{build_pou, checkerboard_parts, checkerboard_with};
use helmholtz_oras::fespace::build_space;
use helmholtz_oras::mesh::{build_uniform_mesh, snap_resolution, RectDomain};
use helmholtz_oras::oras::{build_preconditioner, oras_gmres, oras_richardson};
use helmholtz_oras::C64;

fn main() -> helmholtz_oras::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let k: f64 = args.first().map_or(40.0, |s| s.parse().expect("k"));
    let p: usize = args.get(1).map_or(1, |s| s.parse().expect("p"));
    let domain = RectDomain::unit_square();
    let parts = args.get(2).map_or(checkerboard_parts(k), |s| s.parse().expect("parts"));
    let ratio: f64 = args.get(3).map_or(0.25, |s| s.parse().expect("ratio"));
    let cuts: Vec<f64> = (1..parts).map(|i| i as f64 / parts as f64).collect();
    let h = 2.0 * std::f64::consts::PI / (10.0 * k);
    let (nx, ny) = snap_resolution(domain, h, &cuts)?;
    let problem = assemble_global(k, build_space(build_uniform_mesh(domain, nx, ny)?, p)?)?;
    println!("k = {k}, p = {p}, {parts}×{parts} parts, grid {nx}×{ny}, {} dofs", problem.ndof());
    let decomp = checkerboard_with(&problem.space, parts, ratio / parts as f64)?;
    let pou = build_pou(&problem.space, &decomp)?;
    let prec = build_preconditioner(&problem, decomp, pou)?;
    let rhs = plane_wave_load(&problem.space, k);
    let u0 = vec![C64::new(0.0, 0.0); problem.ndof()];
    let rich = oras_richardson(&problem, &prec, &rhs, &u0, 1e-6, 300);
    let gm = oras_gmres(&problem, &prec, &rhs, &u0, 1e-6, 300);
    println!("Richardson: {} iterations ({:.2}s)", rich.result.iterations, rich.seconds);
    println!("GMRES:      {} iterations ({:.2}s)", gm.result.iterations, gm.seconds);
    Ok(())
}
