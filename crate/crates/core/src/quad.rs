//! One-dimensional Gauss–Legendre rules and composite panel rules.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `P_n(z)` and `P_n'(z)` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gl_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    (x.iter().map(|&xi| c + h * xi).collect(), w.iter().map(|&wi| h * wi).collect())
}

/// Panel edges from `lo` to `hi` whose widths start at `first` and grow by
/// `ratio`; the last panel absorbs the remainder.
pub fn geometric_edges(lo: f64, hi: f64, first: f64, ratio: f64) -> Vec<f64> {
    assert!(hi > lo && first > 0.0 && ratio >= 1.0);
    let mut edges = alloc::vec![lo];
    let mut w = first;
    loop {
        let last = *edges.last().unwrap();
        if last + w >= hi - 0.5 * w {
            break;
        }
        edges.push(last + w);
        w *= ratio;
    }
    edges.push(hi);
    edges
}

/// Composite rule with `m` Gauss–Legendre nodes on every panel.
pub fn panel_rule(edges: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    let mut nodes = Vec::with_capacity(m * edges.len());
    let mut weights = Vec::with_capacity(m * edges.len());
    for e in edges.windows(2) {
        let h = 0.5 * (e[1] - e[0]);
        let c = 0.5 * (e[1] + e[0]);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + h * xi);
            weights.push(h * wi);
        }
    }
    (nodes, weights)
}
