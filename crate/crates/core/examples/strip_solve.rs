//! Eight overlapping strips on a 16/3 × 1 channel: ORAS-preconditioned
//! Richardson and GMRES iteration counts for a plane-wave impedance problem.
//!
//! `cargo run --release --example strip_solve -- [k] [p]`

use helmholtz_oras::assembly::{assemble_global, plane_wave_load};
use helmholtz_oras::decomp::{build_pou, strip_interfaces, strips};
use helmholtz_oras::fespace::build_space;
use helmholtz_oras::mesh::{build_uniform_mesh, snap_resolution, RectDomain};
use helmholtz_oras::oras::{build_preconditioner, oras_gmres, oras_richardson};
use helmholtz_oras::C64;

fn main() -> helmholtz_oras::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let k: f64 = args.first().map_or(20.0, |s| s.parse().expect("k"));
    let p: usize = args.get(1).map_or(1, |s| s.parse().expect("p"));
    let (n, overlap) = (8, 0.5);
    let domain = RectDomain::new(16.0 / 3.0, 1.0)?;
    let h = 2.0 * std::f64::consts::PI / (10.0 * k);
    let (nx, ny) = snap_resolution(domain, h, &strip_interfaces(domain.length, n, overlap))?;
    let space = build_space(build_uniform_mesh(domain, nx, ny)?, p)?;
    let problem = assemble_global(k, space)?;
    println!("k = {k}, p = {p}, grid {nx}×{ny}, {} dofs", problem.ndof());
    let decomp = strips(&problem.space, n, overlap)?;
    let pou = build_pou(&problem.space, &decomp)?;
    let t = std::time::Instant::now();
    let prec = build_preconditioner(&problem, decomp, pou)?;
    println!("local factorisations: {:.2}s", t.elapsed().as_secs_f64());
    let rhs = plane_wave_load(&problem.space, k);
    let u0 = vec![C64::new(0.0, 0.0); problem.ndof()];
    let rich = oras_richardson(&problem, &prec, &rhs, &u0, 1e-6, 200);
    let gm = oras_gmres(&problem, &prec, &rhs, &u0, 1e-6, 200);
    println!("Richardson: {} iterations ({:.2}s)", rich.result.iterations, rich.seconds);
    println!("GMRES:      {} iterations ({:.2}s)", gm.result.iterations, gm.seconds);
    if std::env::var("SHOW_HISTORY").is_ok() {
        for (i, (a, b)) in rich.result.residual_history.iter().zip(&gm.result.residual_history).enumerate() {
            println!("{i:3} {:.3e} {:.3e}", a / rich.result.residual_history[0], b / gm.result.residual_history[0]);
        }
    }
    Ok(())
}
