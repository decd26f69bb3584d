//! Nyström discretization of `psi + A psi = E` over a quadrature rule, the
//! inner product `(psi, e)` and the field `u = 2 d/dx (psi, e)`.
//!
//! Kernel: `A_ij = E_i E_j g_j w_j / (lambda_j + conj(k_i))`. Exponents are
//! written as `log E_i = p_i (xi - (f_i - f_ref) t)` with `x = f_ref t + xi`,
//! and the right-hand side is stored scaled by `exp(-p_ref xi)`, so inner
//! products carry an explicit factor `exp(2 p_ref xi)`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::domain::{boundary_point, panel_quadrature, QuadratureRule, SpectralDomain};
use crate::linalg::{self, Lu};
use crate::phase::{log_e_rel, phase_f, reference_point, MinimizerFrame};
use crate::quad::geometric_edges;
use crate::{Error, Result};

/// Condition estimates above this signal quadrature breakdown.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative size of an imaginary part that is treated as a bug.
pub const REALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub n: usize,
    /// `A`, row-major.
    pub matrix: Vec<Complex64>,
    /// `E_i exp(-p_ref xi)`.
    pub e: Vec<f64>,
    /// Node abscissae `p_i`, used by the x-derivative.
    pub p: Vec<f64>,
    /// `g_i w_i`.
    pub gw: Vec<f64>,
    pub k_ref: [f64; 2],
    pub xi: f64,
    pub y_ratio: f64,
    pub t: f64,
}

impl DiscreteOperator {
    /// `p_ref xi`: `e` is stored divided by `exp(log_scale)`.
    pub fn log_scale(&self) -> f64 {
        self.k_ref[0] * self.xi
    }

    /// Absolute `x` of this operator.
    pub fn x(&self) -> f64 {
        phase_f(self.k_ref[0], self.k_ref[1], self.y_ratio) * self.t + self.xi
    }

    /// `(u, v)` in the `g`-weighted product.
    pub fn weighted_dot(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        u.iter().zip(v).zip(&self.gw).map(|((a, b), w)| a * b.conj() * w).sum()
    }

    /// `D^{1/2} A D^{-1/2}` with `D = diag(g w)`: the operator in an
    /// orthonormal basis of the weighted space.
    pub fn weighted_matrix(&self) -> Vec<Complex64> {
        let n = self.n;
        let s: Vec<f64> = self.gw.iter().map(|w| w.sqrt()).collect();
        let mut m = self.matrix.clone();
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] *= if s[j] > 0.0 { s[i] / s[j] } else { 0.0 };
            }
        }
        m
    }
}

/// Assembles the operator at `x = f(k_ref, Y) t + xi`.
pub fn assemble(rule: &QuadratureRule, k_ref: [f64; 2], xi: f64, y_ratio: f64, t: f64) -> DiscreteOperator {
    let n = rule.len();
    let log_scale = k_ref[0] * xi;
    let le: Vec<f64> = rule.nodes.iter().map(|k| log_e_rel(k[0], k[1], k_ref, xi, t, y_ratio)).collect();
    let big_e: Vec<f64> = le.iter().map(|v| v.exp()).collect();
    let gw: Vec<f64> = rule.gvals.iter().zip(&rule.weights).map(|(g, w)| g * w).collect();
    let mut matrix = Vec::with_capacity(n * n);
    for i in 0..n {
        let ki = rule.nodes[i];
        let kbar = Complex64::new(ki[0], -ki[1]);
        for j in 0..n {
            let lam = Complex64::new(rule.nodes[j][0], rule.nodes[j][1]);
            matrix.push((big_e[i] * big_e[j] * gw[j]) / (lam + kbar));
        }
    }
    DiscreteOperator {
        n,
        matrix,
        e: le.iter().map(|v| (v - log_scale).exp()).collect(),
        p: rule.nodes.iter().map(|k| k[0]).collect(),
        gw,
        k_ref,
        xi,
        y_ratio,
        t,
    }
}

/// Assembles at absolute `(x, y, t)`. The exponent reference is the phase
/// minimizer at `Y = y / t` (or the best boundary sample if it is not unique).
pub fn assemble_a(domain: &SpectralDomain, rule: &QuadratureRule, x: f64, y: f64, t: f64) -> Result<DiscreteOperator> {
    if t == 0.0 {
        return Err(Error::TimeZero);
    }
    let y_ratio = y / t;
    let k_ref = reference_point(domain, y_ratio);
    let xi = x - phase_f(k_ref[0], k_ref[1], y_ratio) * t;
    Ok(assemble(rule, k_ref, xi, y_ratio, t))
}

/// `t = 0` with an explicit `Y`; there `log E = p x`.
pub fn assemble_at_time_zero(domain: &SpectralDomain, rule: &QuadratureRule, x: f64, y_ratio: f64) -> DiscreteOperator {
    assemble(rule, reference_point(domain, y_ratio), x, y_ratio, 0.0)
}

#[derive(Debug, Clone)]
pub struct PsiSolution {
    /// `psi_i exp(-p_ref xi)`.
    pub values: Vec<Complex64>,
    /// `d psi_i / dx exp(-p_ref xi)`.
    pub dx: Vec<Complex64>,
    /// `||(I + A) psi - e|| / ||e||` in the weighted norm.
    pub residual: f64,
    pub condition: f64,
}

/// Solves `(I + A) psi = e` and `(I + A) psi_x = e_x - A_x psi` with one LU.
pub fn solve_psi(op: &DiscreteOperator) -> Result<PsiSolution> {
    let n = op.n;
    let mut m = op.matrix.clone();
    for i in 0..n {
        m[i * n + i] += 1.0;
    }
    let lu = Lu::new(n, m)?;
    let condition = lu.condition_estimate();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned(condition));
    }
    let rhs: Vec<Complex64> = op.e.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut psi = rhs.clone();
    lu.solve(&mut psi);

    // A_x = (p_i + mu_j) A_ij, e_x = p_i e_i.
    let mut dx: Vec<Complex64> = (0..n)
        .map(|i| {
            let row = &op.matrix[i * n..(i + 1) * n];
            let ax: Complex64 = row.iter().zip(&op.p).zip(&psi).map(|((a, pj), v)| a * (op.p[i] + pj) * v).sum();
            op.p[i] * rhs[i] - ax
        })
        .collect();
    lu.solve(&mut dx);

    let apsi = linalg::matvec(n, &op.matrix, &psi);
    let r: Vec<Complex64> = (0..n).map(|i| psi[i] + apsi[i] - rhs[i]).collect();
    let rn = op.weighted_dot(&r, &r).re.sqrt();
    let en = op.weighted_dot(&rhs, &rhs).re.sqrt();
    let residual = if en > 0.0 {
        rn / en
    } else {
        let plain: f64 = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let e_plain: f64 = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if e_plain > 0.0 { plain / e_plain } else { 0.0 }
    };
    Ok(PsiSolution { values: psi, dx, residual, condition })
}

fn check_real(z: Complex64) -> Result<f64> {
    if z.im.abs() > REALITY_TOL * z.re.abs() + f64::MIN_POSITIVE {
        return Err(Error::RealityViolated { re: z.re, im: z.im });
    }
    Ok(z.re)
}

/// `(psi, e) = sum psi_j conj(e_j) g_j w_j`, complex.
pub fn inner_psi_e_complex(op: &DiscreteOperator, sol: &PsiSolution) -> Complex64 {
    let s: Complex64 = sol.values.iter().zip(&op.e).zip(&op.gw).map(|((v, e), w)| v * (e * w)).sum();
    s * (2.0 * op.log_scale()).exp()
}

/// Real `(psi, e)`; errors when the imaginary part is not negligible.
pub fn inner_psi_e(op: &DiscreteOperator, sol: &PsiSolution) -> Result<f64> {
    check_real(inner_psi_e_complex(op, sol))
}

/// `d/dx (psi, e) = (psi_x, e) + (psi, e_x)`, complex.
pub fn d_inner_complex(op: &DiscreteOperator, sol: &PsiSolution) -> Complex64 {
    let s: Complex64 = (0..op.n)
        .map(|i| (sol.dx[i] + sol.values[i] * op.p[i]) * (op.e[i] * op.gw[i]))
        .sum();
    s * (2.0 * op.log_scale()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldValue {
    /// `(psi, e)`.
    pub inner: f64,
    /// `d/dx (psi, e)`.
    pub d_inner: f64,
    /// `u = 2 d/dx (psi, e)`.
    pub u: f64,
    /// `|Im u| / |u|` (or `|Im u|` when `u = 0`).
    pub im_rel: f64,
    pub residual: f64,
    pub condition: f64,
}

/// Solves and evaluates the field for an assembled operator.
pub fn evaluate(op: &DiscreteOperator) -> Result<FieldValue> {
    let sol = solve_psi(op)?;
    let inner = inner_psi_e(op, &sol)?;
    let d = d_inner_complex(op, &sol);
    let d_inner = check_real(d)?;
    let im_rel = if d.re != 0.0 { d.im.abs() / d.re.abs() } else { d.im.abs() };
    Ok(FieldValue { inner, d_inner, u: 2.0 * d_inner, im_rel, residual: sol.residual, condition: sol.condition })
}

/// `u(x, y, t)` on a fixed rule, with the x-derivative taken analytically.
pub fn u_exact(domain: &SpectralDomain, rule: &QuadratureRule, x: f64, y: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::TimeZero);
    }
    Ok(evaluate(&assemble_a(domain, rule, x, y, t)?)?.u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PositivityReport {
    pub trials: usize,
    /// Minimum of `Re (A phi, phi) / (phi, phi)` over nonzero probes.
    pub min_ratio: f64,
}

/// Random-probe check of `Re (A phi, phi) >= 0` in the weighted product.
pub fn check_positivity(op: &DiscreteOperator, trials: usize, seed: u64) -> PositivityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
    let mut min_ratio = f64::INFINITY;
    let mut used = 0;
    for _ in 0..trials {
        let phi: Vec<Complex64> = (0..op.n).map(|_| Complex64::new(unit(), unit())).collect();
        let norm = op.weighted_dot(&phi, &phi).re;
        if norm == 0.0 {
            continue;
        }
        let aphi = linalg::matvec(op.n, &op.matrix, &phi);
        min_ratio = min_ratio.min(op.weighted_dot(&aphi, &phi).re / norm);
        used += 1;
    }
    PositivityReport { trials: used, min_ratio }
}

/// Smallest eigenvalue of the Hermitian part of `A` in the weighted product.
pub fn min_hermitian_eigenvalue(op: &DiscreteOperator) -> f64 {
    linalg::hermitian_part_min_eigenvalue(op.n, &op.weighted_matrix())
}

/// `||(I + A)^{-1}||` in the weighted norm, from singular values.
pub fn resolvent_norm(op: &DiscreteOperator) -> f64 {
    let n = op.n;
    let mut m = op.weighted_matrix();
    for i in 0..n {
        m[i * n + i] += 1.0;
    }
    let s = linalg::singular_values(n, &m);
    1.0 / s[n - 1]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptedOptions {
    /// Gauss–Legendre nodes per panel and direction.
    pub m: usize,
    /// The window keeps every point whose `log E^2` is within this of the maximum.
    pub log_window: f64,
    pub ratio: f64,
}

impl Default for AdaptedOptions {
    fn default() -> Self {
        Self { m: 6, log_window: 40.0, ratio: 2.0 }
    }
}

/// Polar product rule concentrated where `E^2` lives at `(xi, t)`: a window
/// in `(d = 1 - rho, theta)` around `k0`, with geometric panels starting at
/// the natural scales `1 / (t |grad F|)` across and `1 / sqrt(t alpha0)`
/// along the boundary.
pub fn adapted_rule(domain: &SpectralDomain, frame: &MinimizerFrame, xi: f64, t: f64, opts: AdaptedOptions) -> QuadratureRule {
    let spec = &domain.boundary;
    let c = spec.center();
    let th0 = frame.theta0;
    let (g0, d1, _) = spec.jet(th0);
    let radial = [g0[0] - c[0], g0[1] - c[1]];
    let across = (radial[0] * frame.normal[0] + radial[1] * frame.normal[1]).abs().max(1e-3);
    let speed = d1[0].hypot(d1[1]);
    let sd = 1.0 / (t * frame.grad_big_f * across);
    let sth = 1.0 / ((t * frame.alpha0).sqrt() * speed);
    let (dmax, dth) = window(domain, frame, xi, t, opts.log_window, sd, sth);

    let d_edges = geometric_edges(0.0, dmax, sd.min(dmax / 2.0), opts.ratio);
    let half = geometric_edges(0.0, dth, sth.min(dth / 2.0), opts.ratio);
    let mut th_edges: Vec<f64> = half.iter().rev().map(|a| th0 - a).collect();
    th_edges.extend(half.iter().skip(1).map(|a| th0 + a));
    panel_quadrature(domain, &d_edges, &th_edges, opts.m)
}

/// Smallest polar box around `k0` holding all points whose `log E^2`
/// (relative to `2 p0 xi`) is within `log_window` of its maximum.
fn window(domain: &SpectralDomain, frame: &MinimizerFrame, xi: f64, t: f64, log_window: f64, sd: f64, sth: f64) -> (f64, f64) {
    const ND: usize = 300;
    const NT: usize = 600;
    let spec = &domain.boundary;
    let c = spec.center();
    let th0 = frame.theta0;
    let lw = |rho: f64, th: f64| {
        let g = boundary_point(spec, th);
        let p = c[0] + rho * (g[0] - c[0]);
        let q = c[1] + rho * (g[1] - c[1]);
        2.0 * (p - frame.k0[0]) * xi - frame.big_f(p, q) * t
    };
    let mut dmax = (4.0 * log_window * sd).min(1.0);
    let mut dth = (4.0 * log_window.sqrt() * sth).min(PI);
    for _ in 0..40 {
        let mut vals = Vec::with_capacity((ND + 1) * (NT + 1));
        for i in 0..=ND {
            let d = dmax * i as f64 / ND as f64;
            for j in 0..=NT {
                let th = th0 - dth + 2.0 * dth * j as f64 / NT as f64;
                vals.push((d, (th - th0).abs(), lw(1.0 - d, th)));
            }
        }
        let top = vals.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
        let (mut dm, mut tm) = (0.0f64, 0.0f64);
        for &(d, a, v) in &vals {
            if v > top - log_window {
                dm = dm.max(d);
                tm = tm.max(a);
            }
        }
        let mut grow = false;
        if dm > 0.9 * dmax && dmax < 1.0 {
            dmax = (2.0 * dmax).min(1.0);
            grow = true;
        }
        if tm > 0.9 * dth && dth < PI {
            dth = (2.0 * dth).min(PI);
            grow = true;
        }
        if !grow {
            let d = (1.1 * dm + dmax / ND as f64).min(1.0);
            let a = (1.1 * tm + dth / NT as f64).min(PI);
            return (d.max(sd), a.max(sth));
        }
    }
    (dmax, dth)
}

/// Field on the adapted rule at frame-relative `(xi, t)`.
pub fn exact_at(domain: &SpectralDomain, frame: &MinimizerFrame, xi: f64, t: f64, opts: AdaptedOptions) -> Result<FieldValue> {
    let rule = adapted_rule(domain, frame, xi, t, opts);
    evaluate(&assemble(&rule, frame.k0, xi, frame.y_ratio, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_quadrature, WeightSpec};
    use crate::phase::frame_at;
    use approx::assert_relative_eq;
    use num_traits::Zero;

    fn setup(n: usize) -> (SpectralDomain, QuadratureRule) {
        let d = SpectralDomain::default_circle();
        let r = build_quadrature(&d, n, n).unwrap();
        (d, r)
    }

    #[test]
    fn denominators_bounded_below() {
        let (d, r) = setup(8);
        let min = r
            .nodes
            .iter()
            .flat_map(|a| r.nodes.iter().map(move |b| a[0] + b[0]))
            .fold(f64::INFINITY, f64::min);
        assert!(min >= 2.0 * d.a);
    }

    #[test]
    fn far_left_entries_vanish() {
        let (d, r) = setup(8);
        let op = assemble_a(&d, &r, -60.0, 0.5, 1.0).unwrap();
        assert!(op.matrix.iter().all(|a| a.norm() < 1e-40));
    }

    #[test]
    fn time_zero_needs_y() {
        let (d, r) = setup(4);
        assert!(matches!(assemble_a(&d, &r, 0.0, 1.0, 0.0), Err(Error::TimeZero)));
        let op = assemble_at_time_zero(&d, &r, -1.0, 0.5);
        let e0 = op.e[0] * op.log_scale().exp();
        assert_relative_eq!(e0, (-r.nodes[0][0]).exp(), max_relative = 1e-14);
    }

    #[test]
    fn zero_weight_gives_psi_equal_e() {
        let (d, r) = setup(6);
        let dz = d.with_weight(WeightSpec::Constant { value: 0.0 });
        let rz = r.scaled_weight(0.0);
        let op = assemble_a(&dz, &rz, 0.0, 0.5, 1.0).unwrap();
        let sol = solve_psi(&op).unwrap();
        for (v, e) in sol.values.iter().zip(&op.e) {
            assert_eq!(v.re, *e);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn solve_residual_and_norm_bound() {
        let (d, r) = setup(12);
        let op = assemble_a(&d, &r, 0.0, 0.5, 1.0).unwrap();
        let sol = solve_psi(&op).unwrap();
        assert!(sol.residual < 1e-10);
        let e: Vec<Complex64> = op.e.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let pn = op.weighted_dot(&sol.values, &sol.values).re;
        let en = op.weighted_dot(&e, &e).re;
        assert!(pn <= en * (1.0 + 1e-12));
    }

    #[test]
    fn positivity_and_resolvent() {
        let (d, r) = setup(10);
        let op = assemble_a(&d, &r, 0.0, 0.5, 1.0).unwrap();
        assert!(min_hermitian_eigenvalue(&op) >= -1e-10);
        let rep = check_positivity(&op, 100, 42);
        assert_eq!(rep.trials, 100);
        assert!(rep.min_ratio >= -1e-10);
        assert!(resolvent_norm(&op) <= 1.0 + 1e-8);
    }

    #[test]
    fn adjoint_identity() {
        let (d, r) = setup(6);
        let op = assemble_a(&d, &r, 0.3, 0.5, 1.0).unwrap();
        let n = op.n;
        let phi: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.7).cos())).collect();
        let chi: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64 * 1.3).cos(), 0.2)).collect();
        // Adjoint in the weighted product: A* = D^{-1} A^H D.
        let mut astar = alloc::vec![Complex64::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                astar[i * n + j] = op.matrix[j * n + i].conj() * op.gw[j] / op.gw[i];
            }
        }
        let lhs = op.weighted_dot(&linalg::matvec(n, &op.matrix, &phi), &chi);
        let rhs = op.weighted_dot(&linalg::matvec(n, &astar, &chi), &phi).conj();
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(1.0));
        // The kernel is self-adjoint in this product.
        for (a, b) in astar.iter().zip(&op.matrix) {
            assert!((a - b).norm() < 1e-14 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn inner_is_real_and_nonnegative() {
        let (d, r) = setup(10);
        for x in [-5.0, -1.0, 0.0, 2.0] {
            let op = assemble_a(&d, &r, x, 0.5, 1.0).unwrap();
            let sol = solve_psi(&op).unwrap();
            assert!(inner_psi_e(&op, &sol).unwrap() >= 0.0);
        }
    }

    #[test]
    fn analytic_derivative_matches_central_difference() {
        let d = SpectralDomain::default_circle();
        let f = frame_at(&d, 0.5).unwrap();
        let t = 10.0;
        let rule = adapted_rule(&d, &f, 0.0, t, AdaptedOptions { m: 4, ..Default::default() });
        let at = |xi: f64| evaluate(&assemble(&rule, f.k0, xi, 0.5, t)).unwrap();
        let v = at(0.0);
        let h = 1e-5;
        let fd = (at(h).inner - at(-h).inner) / (2.0 * h);
        assert_relative_eq!(v.d_inner, fd, max_relative = 1e-6);
    }

    #[test]
    fn node_relabeling_invariance() {
        let (d, r) = setup(8);
        let n = r.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 37 + 11) % n).collect();
        let a = u_exact(&d, &r, 0.2, 0.5, 1.0).unwrap();
        let b = u_exact(&d, &r.permuted(&perm), 0.2, 0.5, 1.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-11);
    }

    #[test]
    fn adapted_rule_reference_values() {
        let d = SpectralDomain::default_circle();
        let f = frame_at(&d, 0.5).unwrap();
        let v = exact_at(&d, &f, 0.0, 10.0, AdaptedOptions::default()).unwrap();
        assert_relative_eq!(v.inner, 3.774527e-4, max_relative = 1e-6);
        assert_relative_eq!(v.d_inner, 1.2601291e-3, max_relative = 1e-6);
        assert!(v.im_rel < REALITY_TOL);
    }
}
