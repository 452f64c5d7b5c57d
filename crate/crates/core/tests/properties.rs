use helmholtz_oras::decomp::{build_pou, strips, weighted_prolong};
use helmholtz_oras::experiments::{guard_mesh_resolution, HRule};
use helmholtz_oras::fespace::build_space;
use helmholtz_oras::impmaps::{imp_map_norm, ImpMap};
use helmholtz_oras::linalg::{gmres, lu_factor, norm2, CsrComplex, Identity, LinearOperator};
use helmholtz_oras::mesh::{build_uniform_mesh, RectDomain};
use helmholtz_oras::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &l * l.transpose() + DMatrix::identity(n, n) * 0.5
}

fn random_sparse(n: usize, rng: &mut ChaCha8Rng) -> CsrComplex {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, C64::new(4.0, 0.0) + random_c(rng)));
        for _ in 0..3 {
            let j = rng.random_range(0..n);
            t.push((i, j, random_c(rng)));
        }
    }
    CsrComplex::from_triplets(n, n, &t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn strip_partition_of_unity_sums_to_one(n in 2usize..6, width in 8usize..14, cells in 1usize..4, p in 1usize..3) {
        let h = 1.0 / 8.0;
        let nx = n * width - (n - 1) * cells;
        let mesh = build_uniform_mesh(RectDomain::new(nx as f64 * h, 1.0).unwrap(), nx, 8).unwrap();
        let space = build_space(mesh, p).unwrap();
        let decomp = strips(&space, n, cells as f64 * h).unwrap();
        let pou = build_pou(&space, &decomp).unwrap();
        let mut total = vec![C64::new(0.0, 0.0); space.ndof];
        for (j, s) in decomp.subdomains.iter().enumerate() {
            let ones = vec![C64::new(1.0, 0.0); s.ndof()];
            for (t, v) in total.iter_mut().zip(weighted_prolong(&decomp, &pou, j, &ones)) {
                *t += v;
            }
        }
        let worst = total.iter().map(|v| (v - 1.0).norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-14, "max deviation {worst}");
        for w in pou.weights.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(w));
        }
    }

    #[test]
    fn h_rule_text_roundtrips(a in 1u32..50, b in 1u32..50, level in 0u32..4, k in 1.0f64..80.0) {
        let rule: HRule = format!("{a}/{b}k").parse().unwrap();
        let expected = a as f64 / (b as f64 * k) / 2f64.powi(level as i32);
        prop_assert!((rule.eval(k, level) - expected).abs() <= 1e-14 * expected);
        let again: HRule = rule.to_string().parse().unwrap();
        prop_assert_eq!(again.eval(k, level), rule.eval(k, level));
    }

    #[test]
    fn fixed_h_rule_ignores_k(h in 1e-4f64..1.0, k1 in 1.0f64..50.0, k2 in 1.0f64..50.0) {
        let rule = HRule::fixed(h);
        prop_assert_eq!(rule.eval(k1, 0), rule.eval(k2, 0));
        prop_assert_eq!(rule.eval(k1, 1), h / 2.0);
    }

    #[test]
    fn guard_is_monotone_in_h_and_k(h in 1e-3f64..0.1, k in 1.0f64..60.0, p in 1usize..5) {
        let g = guard_mesh_resolution(k, h, p, 1.0, 1.0);
        prop_assert!(guard_mesh_resolution(k, h / 2.0, p, 1.0, 1.0).quantity < g.quantity);
        prop_assert!(guard_mesh_resolution(2.0 * k, h, p, 1.0, 1.0).quantity > g.quantity);
        prop_assert_eq!(g.ok, g.quantity <= 1.0);
    }

    #[test]
    fn imp_map_norm_bounds_random_ratios(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (10, 8);
        let map = ImpMap {
            g: DMatrix::from_fn(m, n, |_, _| random_c(&mut rng)),
            source_mass: spd(n, &mut rng),
            target_mass: spd(m, &mut rng),
        };
        let norm = imp_map_norm(&map).unwrap();
        let mass_norm = |mass: &DMatrix<f64>, c: &[C64]| -> f64 {
            let mut s = 0.0;
            for i in 0..c.len() {
                for j in 0..c.len() {
                    s += (c[i].conj() * mass[(i, j)] * c[j]).re;
                }
            }
            s.sqrt()
        };
        let mut best: f64 = 0.0;
        for _ in 0..2000 {
            let c: Vec<C64> = (0..n).map(|_| random_c(&mut rng)).collect();
            let ratio = mass_norm(&map.target_mass, &map.apply(&c)) / mass_norm(&map.source_mass, &c);
            prop_assert!(ratio <= norm * (1.0 + 1e-10), "ratio {ratio} exceeds norm {norm}");
            best = best.max(ratio);
        }
        prop_assert!(best >= 0.3 * norm, "sampled {best} vs norm {norm}");
    }

    #[test]
    fn sparse_lu_solves(n in 5usize..80, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sparse(n, &mut rng);
        let b: Vec<C64> = (0..n).map(|_| random_c(&mut rng)).collect();
        let x = lu_factor(&a).unwrap().solve(&b);
        let r: Vec<C64> = a.apply_vec(&x).iter().zip(&b).map(|(ax, bi)| ax - bi).collect();
        prop_assert!(norm2(&r) <= 1e-12 * norm2(&b));
    }

    #[test]
    fn gmres_preconditioned_residuals_do_not_increase(n in 5usize..60, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sparse(n, &mut rng);
        let b: Vec<C64> = (0..n).map(|_| random_c(&mut rng)).collect();
        let out = gmres(&a, &Identity(n), &b, &vec![C64::new(0.0, 0.0); n], 1e-10, n + 5);
        prop_assert!(out.converged);
        for w in out.preconditioned_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }
}
