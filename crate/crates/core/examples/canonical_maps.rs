//! Norms of the canonical impedance-to-impedance maps on `[0, 1] × [0, 1]`
//! as the output line moves away from the data edge.
//!
//! `cargo run --release --example canonical_maps -- [k] [p] [h]`

use helmholtz_oras::impmaps::{canonical_imp_maps, imp_map_norm, CanonicalSetup};

fn main() -> helmholtz_oras::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let k: f64 = args.first().map_or(10.0, |s| s.parse().expect("k"));
    let p: usize = args.get(1).map_or(2, |s| s.parse().expect("p"));
    let target_h: f64 = args.get(2).map_or(80f64.powf(-1.25), |s| s.parse().expect("h"));
    // snap once without output lines, then place them on multiples of the cell width
    let probe = CanonicalSetup::snapped(k, p, 1.0, target_h, &[0.25, 0.5, 0.75])?;
    let h = probe.cell_width();
    let deltas = [h, 2.0 * h, 4.0 * h, 0.25, 0.5, 0.75, 1.0 - 4.0 * h, 1.0 - 2.0 * h, 1.0 - h];
    let setup = CanonicalSetup::snapped(k, p, 1.0, target_h, &deltas)?;
    println!("k = {k}, p = {p}, grid {}×{}", setup.nx, setup.ny);
    let t = std::time::Instant::now();
    let [mm, pm] = canonical_imp_maps(&setup, &deltas)?;
    println!("maps built in {:.1}s", t.elapsed().as_secs_f64());
    println!("{:>10} {:>10} {:>10}", "delta", "-→-", "+→-");
    for (i, d) in deltas.iter().enumerate() {
        println!("{d:10.5} {:10.4} {:10.4}", imp_map_norm(&mm[i])?, imp_map_norm(&pm[i])?);
    }
    Ok(())
}
