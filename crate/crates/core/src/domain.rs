//! Spectral domains `Omega` in the right half-plane, their boundary curves,
//! weights and quadrature rules over them.
//!
//! Every supported boundary is star-shaped about its center and is
//! parameterized counterclockwise by `theta in [0, 2 pi)`. Quadrature uses the
//! polar map `k(rho, theta) = c + rho (Gamma(theta) - c)`, whose area element
//! is `rho * cross(Gamma(theta) - c, Gamma'(theta)) drho dtheta`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use num_traits::{Euclid, Float};

use crate::quad::{gl_interval, panel_rule};
use crate::{Error, Result};

/// Number of boundary samples used for dense checks.
pub const CHECK_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum BoundarySpec {
    Circle { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], radii: [f64; 2] },
    /// Radius `mean + sum_k (cos[k-1] cos(k theta) + sin[k-1] sin(k theta))`
    /// in polar angle about `center`.
    CustomSmooth {
        center: [f64; 2],
        mean: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        cos: Vec<f64>,
        #[cfg_attr(feature = "serde", serde(default))]
        sin: Vec<f64>,
    },
}

impl BoundarySpec {
    pub fn center(&self) -> [f64; 2] {
        match self {
            Self::Circle { center, .. } | Self::Ellipse { center, .. } | Self::CustomSmooth { center, .. } => *center,
        }
    }

    /// Point, first and second derivative in `theta`.
    pub fn jet(&self, theta: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let (s, c) = theta.sin_cos();
        match self {
            Self::Circle { center, radius: r } => (
                [center[0] + r * c, center[1] + r * s],
                [-r * s, r * c],
                [-r * c, -r * s],
            ),
            Self::Ellipse { center, radii: [a, b] } => (
                [center[0] + a * c, center[1] + b * s],
                [-a * s, b * c],
                [-a * c, -b * s],
            ),
            Self::CustomSmooth { center, mean, cos, sin } => {
                let (mut r, mut dr, mut ddr) = (*mean, 0.0, 0.0);
                for (k, a) in cos.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let (sk, ck) = (kf * theta).sin_cos();
                    r += a * ck;
                    dr -= a * kf * sk;
                    ddr -= a * kf * kf * ck;
                }
                for (k, b) in sin.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let (sk, ck) = (kf * theta).sin_cos();
                    r += b * sk;
                    dr += b * kf * ck;
                    ddr -= b * kf * kf * sk;
                }
                (
                    [center[0] + r * c, center[1] + r * s],
                    [dr * c - r * s, dr * s + r * c],
                    [ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s],
                )
            }
        }
    }

    /// Whether `k` lies strictly inside the curve.
    pub fn contains(&self, k: [f64; 2]) -> bool {
        match self {
            Self::Circle { center, radius } => {
                let (dx, dy) = (k[0] - center[0], k[1] - center[1]);
                dx * dx + dy * dy < radius * radius
            }
            Self::Ellipse { center, radii: [a, b] } => {
                let (dx, dy) = ((k[0] - center[0]) / a, (k[1] - center[1]) / b);
                dx * dx + dy * dy < 1.0
            }
            Self::CustomSmooth { center, .. } => {
                let (dx, dy) = (k[0] - center[0], k[1] - center[1]);
                let phi = dy.atan2(dx);
                let g = boundary_point(self, phi);
                let (rx, ry) = (g[0] - center[0], g[1] - center[1]);
                dx * dx + dy * dy < rx * rx + ry * ry
            }
        }
    }
}

pub fn boundary_point(spec: &BoundarySpec, theta: f64) -> [f64; 2] {
    spec.jet(theta).0
}

/// Signed curvature of the counterclockwise boundary at `theta`.
pub fn curvature_at(spec: &BoundarySpec, theta: f64) -> f64 {
    let (_, d1, d2) = spec.jet(theta);
    let speed = d1[0].hypot(d1[1]);
    (d1[0] * d2[1] - d1[1] * d2[0]) / (speed * speed * speed)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum WeightSpec {
    Constant { value: f64 },
    /// `amplitude * exp(-|k - center|^2 / (2 width^2))`.
    Gaussian { amplitude: f64, center: [f64; 2], width: f64 },
}

impl WeightSpec {
    pub fn eval(&self, p: f64, q: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Gaussian { amplitude, center, width } => {
                let d2 = (p - center[0]).powi(2) + (q - center[1]).powi(2);
                amplitude * (-d2 / (2.0 * width * width)).exp()
            }
        }
    }

    /// Same weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Constant { value } => Self::Constant { value: value * c },
            Self::Gaussian { amplitude, center, width } => {
                Self::Gaussian { amplitude: amplitude * c, center: *center, width: *width }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDomain {
    pub boundary: BoundarySpec,
    pub weight: WeightSpec,
    /// `inf Re k` over the closure.
    pub a: f64,
    /// `sup Re k` over the closure.
    pub b: f64,
}

impl SpectralDomain {
    /// Builds the domain and fills in `a` and `b`. No hypotheses are checked
    /// here; see [`validate_domain`].
    pub fn new(boundary: BoundarySpec, weight: WeightSpec) -> Self {
        let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
        let n = 4 * CHECK_POINTS;
        let mut best = 0.0;
        for i in 0..n {
            let th = TAU * i as f64 / n as f64;
            let p = boundary_point(&boundary, th)[0];
            if p < a {
                a = p;
                best = th;
            }
            b = b.max(p);
        }
        // Re is linear, so its extremes sit on the boundary; polish the minimum.
        let h = TAU / n as f64;
        let (_, amin) = crate::optimize::golden_section(|th| boundary_point(&boundary, th)[0], best - h, best + h, 1e-13);
        Self { a: a.min(amin), b, boundary, weight }
    }

    /// Circle centered at `(2, 0.5)` with radius 1 and `g = 1`.
    pub fn default_circle() -> Self {
        Self::new(
            BoundarySpec::Circle { center: [2.0, 0.5], radius: 1.0 },
            WeightSpec::Constant { value: 1.0 },
        )
    }

    pub fn g(&self, p: f64, q: f64) -> f64 {
        self.weight.eval(p, q)
    }

    pub fn with_weight(&self, weight: WeightSpec) -> Self {
        Self { weight, ..self.clone() }
    }

    pub fn contains(&self, k: [f64; 2]) -> bool {
        self.boundary.contains(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DomainReport {
    pub checks: Vec<Check>,
}

impl DomainReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Checks the standing hypotheses on a dense boundary grid: distance from
/// the imaginary axis, positive curvature, a well-formed `C^2`
/// parameterization and a positive weight.
pub fn validate_domain(domain: &SpectralDomain) -> DomainReport {
    let spec = &domain.boundary;
    let mut checks = Vec::new();

    let shape_ok = match spec {
        BoundarySpec::Circle { radius, .. } => *radius > 0.0 && radius.is_finite(),
        BoundarySpec::Ellipse { radii, .. } => radii.iter().all(|r| *r > 0.0 && r.is_finite()),
        BoundarySpec::CustomSmooth { mean, cos, sin, .. } => {
            *mean > 0.0 && cos.iter().chain(sin).all(|c| c.is_finite())
        }
    };
    checks.push(Check {
        name: "parameters",
        passed: shape_ok && spec.center().iter().all(|c| c.is_finite()),
        value: 0.0,
        detail: String::from("finite center and positive radii"),
    });

    checks.push(Check {
        name: "axis-distance",
        passed: domain.a > 0.0,
        value: domain.a,
        detail: format!("inf Re k = {:.6}", domain.a),
    });

    let c = spec.center();
    let mut kmin = f64::INFINITY;
    let mut argmin = 0.0;
    let mut min_radius = f64::INFINITY;
    let mut max_jump: f64 = 0.0;
    let mut kmax: f64 = 0.0;
    let mut prev = curvature_at(spec, 0.0);
    for i in 0..CHECK_POINTS {
        let th = TAU * i as f64 / CHECK_POINTS as f64;
        let k = curvature_at(spec, th);
        if k < kmin {
            kmin = k;
            argmin = th;
        }
        kmax = kmax.max(k.abs());
        max_jump = max_jump.max((k - prev).abs());
        prev = k;
        let g = boundary_point(spec, th);
        min_radius = min_radius.min((g[0] - c[0]).hypot(g[1] - c[1]));
    }
    checks.push(Check {
        name: "curvature",
        passed: kmin > 0.0 && kmin.is_finite(),
        value: kmin,
        detail: format!("min curvature {kmin:.6} at theta = {argmin:.6}"),
    });
    // Curvature must vary continuously; a jump larger than a tenth of its
    // range between neighbouring samples flags an under-resolved or kinked curve.
    checks.push(Check {
        name: "c2",
        passed: max_jump.is_finite() && max_jump <= 0.1 * kmax.max(1e-300) + 1e-12 && min_radius > 0.0,
        value: max_jump,
        detail: format!("max curvature jump {max_jump:.3e}, min radius {min_radius:.6}"),
    });

    let mut gmin = f64::INFINITY;
    let (nodes, _) = polar_nodes(spec, &gl_interval(8, 0.0, 1.0), &gl_interval(64, 0.0, TAU));
    for k in nodes.iter() {
        gmin = gmin.min(domain.g(k[0], k[1]));
    }
    for i in 0..CHECK_POINTS {
        let k = boundary_point(spec, TAU * i as f64 / CHECK_POINTS as f64);
        gmin = gmin.min(domain.g(k[0], k[1]));
    }
    checks.push(Check {
        name: "weight",
        passed: gmin > 0.0 && gmin.is_finite(),
        value: gmin,
        detail: format!("min g = {gmin:.6e}"),
    });

    DomainReport { checks }
}

/// Nodes, area weights and weight values discretizing `integral over Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub gvals: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Rule with the node order permuted by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            nodes: perm.iter().map(|&i| self.nodes[i]).collect(),
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
            gvals: perm.iter().map(|&i| self.gvals[i]).collect(),
        }
    }

    /// Same nodes with g values multiplied by `c`.
    pub fn scaled_weight(&self, c: f64) -> Self {
        Self { gvals: self.gvals.iter().map(|g| g * c).collect(), ..self.clone() }
    }
}

fn polar_nodes(spec: &BoundarySpec, rho: &(Vec<f64>, Vec<f64>), theta: &(Vec<f64>, Vec<f64>)) -> (Vec<[f64; 2]>, Vec<f64>) {
    let c = spec.center();
    let mut nodes = Vec::with_capacity(rho.0.len() * theta.0.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (&r, &wr) in rho.0.iter().zip(&rho.1) {
        for (&th, &wt) in theta.0.iter().zip(&theta.1) {
            let (g, d, _) = spec.jet(th);
            let (gx, gy) = (g[0] - c[0], g[1] - c[1]);
            let jac = r * (gx * d[1] - gy * d[0]);
            nodes.push([c[0] + r * gx, c[1] + r * gy]);
            weights.push(wr * wt * jac);
        }
    }
    (nodes, weights)
}

fn finish(domain: &SpectralDomain, nodes: Vec<[f64; 2]>, weights: Vec<f64>) -> QuadratureRule {
    let gvals = nodes.iter().map(|k| domain.g(k[0], k[1])).collect();
    QuadratureRule { nodes, weights, gvals }
}

/// Gauss–Legendre product rule on the polar map, `n_radial x n_angular` nodes.
pub fn build_quadrature(domain: &SpectralDomain, n_radial: usize, n_angular: usize) -> Result<QuadratureRule> {
    if n_radial < 2 || n_angular < 2 {
        return Err(Error::BadArgument("quadrature needs at least 2 x 2 nodes"));
    }
    let report = validate_domain(domain);
    if !report.passed() {
        let names: Vec<&str> = report.failures().map(|c| c.name).collect();
        return Err(Error::DomainInvalid(names.join(", ")));
    }
    let (nodes, weights) = polar_nodes(&domain.boundary, &gl_interval(n_radial, 0.0, 1.0), &gl_interval(n_angular, 0.0, TAU));
    Ok(finish(domain, nodes, weights))
}

/// Polar product rule on panels: `d = 1 - rho` over `d_edges` and `theta`
/// over `theta_edges`, `m` Gauss–Legendre nodes per panel in each direction.
pub fn panel_quadrature(domain: &SpectralDomain, d_edges: &[f64], theta_edges: &[f64], m: usize) -> QuadratureRule {
    let (d, wd) = panel_rule(d_edges, m);
    let rho = (d.iter().map(|d| 1.0 - d).collect(), wd);
    let theta = panel_rule(theta_edges, m);
    let (nodes, weights) = polar_nodes(&domain.boundary, &rho, &theta);
    finish(domain, nodes, weights)
}

/// Reduces `theta` to `[-pi, pi)` around zero.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = Euclid::rem_euclid(&(theta + PI), &TAU) - PI;
    if t >= PI { t - TAU } else { t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn circle(c: [f64; 2], r: f64) -> BoundarySpec {
        BoundarySpec::Circle { center: c, radius: r }
    }

    #[test]
    fn circle_points() {
        let s = circle([2.0, 0.0], 1.0);
        let p = boundary_point(&s, 0.0);
        assert_relative_eq!(p[0], 3.0);
        assert_relative_eq!(p[1], 0.0);
        let p = boundary_point(&s, PI);
        assert_relative_eq!(p[0], 1.0);
        assert!(p[1].abs() < 1e-15);
    }

    #[test]
    fn ellipse_top_point() {
        let s = BoundarySpec::Ellipse { center: [2.0, 0.5], radii: [1.0, 0.5] };
        let p = boundary_point(&s, PI / 2.0);
        assert!((p[0] - 2.0).abs() < 1e-15);
        assert_relative_eq!(p[1], 1.0);
    }

    #[test]
    fn curvatures() {
        assert_relative_eq!(curvature_at(&circle([2.0, 0.0], 1.0), 0.7), 1.0, epsilon = 1e-14);
        assert_relative_eq!(curvature_at(&circle([2.0, 0.0], 0.5), 2.1), 2.0, epsilon = 1e-14);
        let e = BoundarySpec::Ellipse { center: [2.0, 0.0], radii: [1.0, 0.5] };
        let (a, b): (f64, f64) = (1.0, 0.5);
        for th in [0.0f64, 0.4, 1.3, 2.9] {
            let (s, c) = th.sin_cos();
            let exact = a * b / (a * a * s * s + b * b * c * c).powf(1.5);
            assert_relative_eq!(curvature_at(&e, th), exact, epsilon = 1e-13);
        }
        // End of the major axis: a / b^2.
        assert_relative_eq!(curvature_at(&e, 0.0), 4.0, epsilon = 1e-14);
        assert_relative_eq!(curvature_at(&e, PI / 2.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn fourier_circle_matches_circle() {
        let f = BoundarySpec::CustomSmooth { center: [2.0, 0.5], mean: 1.0, cos: alloc::vec![], sin: alloc::vec![] };
        let c = circle([2.0, 0.5], 1.0);
        for th in [0.1, 1.0, 4.0] {
            let (a, da, dda) = f.jet(th);
            let (b, db, ddb) = c.jet(th);
            for i in 0..2 {
                assert_relative_eq!(a[i], b[i], epsilon = 1e-14);
                assert_relative_eq!(da[i], db[i], epsilon = 1e-14);
                assert_relative_eq!(dda[i], ddb[i], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn fourier_derivatives_match_finite_differences() {
        let f = BoundarySpec::CustomSmooth { center: [3.0, 0.0], mean: 1.0, cos: alloc::vec![0.05, 0.02], sin: alloc::vec![0.0, 0.03] };
        let h = 1e-5;
        for th in [0.3, 2.0, 5.5] {
            let (_, d, dd) = f.jet(th);
            let (pp, dp, _) = f.jet(th + h);
            let (pm, dm, _) = f.jet(th - h);
            for i in 0..2 {
                assert!((d[i] - (pp[i] - pm[i]) / (2.0 * h)).abs() < 1e-8);
                assert!((dd[i] - (dp[i] - dm[i]) / (2.0 * h)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn default_domain_is_valid() {
        let d = SpectralDomain::default_circle();
        let r = validate_domain(&d);
        assert!(r.passed(), "{r:?}");
        assert_relative_eq!(d.a, 1.0, epsilon = 1e-12);
        assert_relative_eq!(d.b, 3.0, epsilon = 1e-12);
        let c = SpectralDomain::new(circle([2.0, 0.0], 1.0), WeightSpec::Constant { value: 1.0 });
        assert_relative_eq!(validate_domain(&c).get("axis-distance").unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn touching_axis_fails() {
        let d = SpectralDomain::new(circle([1.0, 0.0], 1.0), WeightSpec::Constant { value: 1.0 });
        let r = validate_domain(&d);
        assert!(!r.get("axis-distance").unwrap().passed);
        assert!(r.get("weight").unwrap().passed);
        assert!(matches!(build_quadrature(&d, 8, 8), Err(Error::DomainInvalid(_))));
    }

    #[test]
    fn nonconvex_fourier_fails_curvature() {
        let b = BoundarySpec::CustomSmooth { center: [4.0, 0.0], mean: 1.0, cos: alloc::vec![0.0, 0.0, 0.3], sin: alloc::vec![] };
        let d = SpectralDomain::new(b, WeightSpec::Constant { value: 1.0 });
        assert!(!validate_domain(&d).get("curvature").unwrap().passed);
    }

    #[test]
    fn zero_weight_fails() {
        let d = SpectralDomain::default_circle().with_weight(WeightSpec::Constant { value: 0.0 });
        assert!(!validate_domain(&d).get("weight").unwrap().passed);
    }

    #[test]
    fn areas() {
        let d = SpectralDomain::default_circle();
        let r = build_quadrature(&d, 32, 32).unwrap();
        assert!((r.area() - PI).abs() < 1e-8);
        assert!(r.weights.iter().all(|w| *w > 0.0));
        assert!(r.nodes.iter().all(|k| k[0] > 0.0 && d.contains(*k)));
        let e = SpectralDomain::new(
            BoundarySpec::Ellipse { center: [2.0, 0.5], radii: [1.0, 0.5] },
            WeightSpec::Constant { value: 1.0 },
        );
        let r = build_quadrature(&e, 16, 16).unwrap();
        assert!((r.area() - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn fourier_area() {
        // Area of r(phi) = 1 + e cos(2 phi) is pi (1 + e^2 / 2).
        let e = 0.1;
        let b = BoundarySpec::CustomSmooth { center: [3.0, 0.0], mean: 1.0, cos: alloc::vec![0.0, e], sin: alloc::vec![] };
        let d = SpectralDomain::new(b, WeightSpec::Constant { value: 1.0 });
        let r = build_quadrature(&d, 16, 64).unwrap();
        assert_relative_eq!(r.area(), PI * (1.0 + e * e / 2.0), max_relative = 1e-10);
    }

    #[test]
    fn wrap() {
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(-0.2), -0.2);
    }
}
