//! Gauss–Legendre rules on `[0, 1]` and collapsed product rules on the
//! reference triangle.

/// Gauss–Legendre nodes and weights on `[0, 1]` with `n` points (exact to
/// degree `2n − 1`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n; the roots come out in decreasing order
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Quadrature on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Conical product rule exact for polynomials of total degree `degree`.
///
/// Uses the collapse `ξ = s`, `η = (1 − s) t` with Jacobian `1 − s`.
pub fn triangle_rule(degree: usize) -> TriangleRule {
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (s, ws) in x.iter().zip(&w) {
        for (t, wt) in x.iter().zip(&w) {
            points.push([*s, (1.0 - s) * t]);
            weights.push(ws * wt * (1.0 - s));
        }
    }
    TriangleRule { points, weights }
}
