//! Checks against the PDE: finite-difference KP-I residuals, the Marchenko
//! system behind the construction, decay audits and grid comparisons.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::domain::{QuadratureRule, SpectralDomain};
use crate::fredholm::{assemble_a, solve_psi};
use crate::optimize::fit_slope;
use crate::{Error, Result};

/// `alpha^2` in `(u_t + 3/2 u u_x + 1/4 u_xxx)_x + 3/4 alpha^2 u_yy = 0`;
/// KP-I has `alpha = i`.
pub const ALPHA_SQ: f64 = -1.0;

/// Largest admissible `h p0` for the residual stencils.
pub const MAX_STEP_P0: f64 = 0.1;

/// Finite-difference derivatives entering the KP residual at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KpTerms {
    pub u: f64,
    pub u_x: f64,
    pub u_xx: f64,
    pub u_xxxx: f64,
    pub u_xt: f64,
    pub u_yy: f64,
}

impl KpTerms {
    /// `u_xt + 3/2 (u_x^2 + u u_xx) + 1/4 u_xxxx + 3/4 alpha^2 u_yy`.
    pub fn residual(&self) -> f64 {
        self.u_xt + 1.5 * (self.u_x * self.u_x + self.u * self.u_xx) + 0.25 * self.u_xxxx + 0.75 * ALPHA_SQ * self.u_yy
    }

    /// Sum of the magnitudes of the individual terms.
    pub fn scale(&self) -> f64 {
        self.u_xt.abs()
            + 1.5 * (self.u_x * self.u_x).abs()
            + 1.5 * (self.u * self.u_xx).abs()
            + 0.25 * self.u_xxxx.abs()
            + 0.75 * self.u_yy.abs()
    }
}

fn d1<F: FnMut(f64) -> f64>(mut f: F, h: f64) -> f64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

/// 4th-order stencils in `x` (5-point `u_x`, `u_xx`; 7-point `u_xxxx`),
/// central differences of `u_x` in `t` and a 3-point `u_yy`.
pub fn kp_terms<F: FnMut(f64, f64, f64) -> f64>(mut u: F, x0: f64, y0: f64, t0: f64, h: f64) -> KpTerms {
    let line: Vec<f64> = (-3..=3).map(|i| u(x0 + i as f64 * h, y0, t0)).collect();
    let c = |i: i32| line[(i + 3) as usize];
    let u_x = (-c(2) + 8.0 * c(1) - 8.0 * c(-1) + c(-2)) / (12.0 * h);
    let u_xx = (-c(2) + 16.0 * c(1) - 30.0 * c(0) + 16.0 * c(-1) - c(-2)) / (12.0 * h * h);
    let u_xxxx = (-c(3) + 12.0 * c(2) - 39.0 * c(1) + 56.0 * c(0) - 39.0 * c(-1) + 12.0 * c(-2) - c(-3)) / (6.0 * h.powi(4));
    let ux_plus = d1(|s| u(x0 + s, y0, t0 + h), h);
    let ux_minus = d1(|s| u(x0 + s, y0, t0 - h), h);
    let u_xt = (ux_plus - ux_minus) / (2.0 * h);
    let u_yy = (u(x0, y0 + h, t0) - 2.0 * c(0) + u(x0, y0 - h, t0)) / (h * h);
    KpTerms { u: c(0), u_x, u_xx, u_xxxx, u_xt, u_yy }
}

/// `|residual|` of KP-I at `(x0, y0, t0)` with step `h`.
pub fn kp_residual<F: FnMut(f64, f64, f64) -> f64>(u: F, x0: f64, y0: f64, t0: f64, h: f64, p0: f64) -> Result<f64> {
    if h * p0 > MAX_STEP_P0 {
        return Err(Error::StepTooLarge { h, p0 });
    }
    Ok(kp_terms(u, x0, y0, t0, h).residual().abs())
}

/// `2 p0^2 sech^2(p0 (x - p0^2 t))`, the y-independent line soliton.
pub fn one_soliton(p0: f64) -> impl Fn(f64, f64, f64) -> f64 + Copy {
    move |x, _y, t| {
        let c = (p0 * (x - p0 * p0 * t)).cosh();
        2.0 * p0 * p0 / (c * c)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log residual` against `log h`; only fitted
    /// with at least four spacings.
    pub order: Option<f64>,
    /// Rounding floor `eps |u| 56 / (24 h^4)` at the smallest spacing.
    pub floor: f64,
}

impl ResidualReport {
    /// `r(h_k) / r(h_{k+1})` for consecutive spacings.
    pub fn ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

pub fn residual_study<F: FnMut(f64, f64, f64) -> f64>(
    mut u: F,
    x0: f64,
    y0: f64,
    t0: f64,
    spacings: &[f64],
    p0: f64,
) -> Result<ResidualReport> {
    let mut residuals = Vec::with_capacity(spacings.len());
    let mut umax = 0.0f64;
    for &h in spacings {
        if h * p0 > MAX_STEP_P0 {
            return Err(Error::StepTooLarge { h, p0 });
        }
        let terms = kp_terms(&mut u, x0, y0, t0, h);
        umax = umax.max(terms.u.abs());
        residuals.push(terms.residual().abs());
    }
    let order = (spacings.len() >= 4).then(|| {
        let lx: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
        let ly: Vec<f64> = residuals.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
        fit_slope(&lx, &ly)
    });
    let hmin = spacings.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = f64::EPSILON * umax * 56.0 / (24.0 * hmin.powi(4));
    Ok(ResidualReport { spacings: spacings.to_vec(), residuals, order, floor })
}

fn log_e_abs(p: f64, q: f64, x: f64, y: f64, t: f64) -> f64 {
    p * x - p * (p * p - 3.0 * q * q) * t + 2.0 * p * q * y
}

/// `F(z, x) = sum E_i(z) E_i(x) e^{i q_i (z - x)} g_i w_i`.
pub fn marchenko_f(rule: &QuadratureRule, z: f64, x: f64, y: f64, t: f64) -> Complex64 {
    rule.nodes
        .iter()
        .zip(rule.weights.iter().zip(&rule.gvals))
        .map(|(k, (w, g))| {
            let m = (log_e_abs(k[0], k[1], z, y, t) + log_e_abs(k[0], k[1], x, y, t)).exp() * g * w;
            Complex64::from_polar(m, k[1] * (z - x))
        })
        .sum()
}

/// Relative finite-difference residuals of `F_t + F_xxx + F_zzz = 0` and
/// `i F_y + F_xx - F_zz = 0`, each divided by the sum of its term magnitudes.
pub fn marchenko_pde_residuals(rule: &QuadratureRule, z: f64, x: f64, y: f64, t: f64, h: f64) -> (f64, f64) {
    let f = |z: f64, x: f64, y: f64, t: f64| marchenko_f(rule, z, x, y, t);
    let first = |g: &dyn Fn(f64) -> Complex64| (-g(2.0 * h) + g(h) * 8.0 - g(-h) * 8.0 + g(-2.0 * h)) / (12.0 * h);
    let second = |g: &dyn Fn(f64) -> Complex64| {
        (-g(2.0 * h) + g(h) * 16.0 - g(0.0) * 30.0 + g(-h) * 16.0 - g(-2.0 * h)) / (12.0 * h * h)
    };
    let third = |g: &dyn Fn(f64) -> Complex64| {
        (-g(3.0 * h) + g(2.0 * h) * 8.0 - g(h) * 13.0 + g(-h) * 13.0 - g(-2.0 * h) * 8.0 + g(-3.0 * h)) / (8.0 * h * h * h)
    };
    let f_t = first(&|s| f(z, x, y, t + s));
    let f_y = first(&|s| f(z, x, y + s, t));
    let f_xx = second(&|s| f(z, x + s, y, t));
    let f_zz = second(&|s| f(z + s, x, y, t));
    let f_xxx = third(&|s| f(z, x + s, y, t));
    let f_zzz = third(&|s| f(z + s, x, y, t));
    let i = Complex64::i();
    let r1 = (f_t + f_xxx + f_zzz).norm() / (f_t.norm() + f_xxx.norm() + f_zzz.norm());
    let r2 = (i * f_y + f_xx - f_zz).norm() / (f_y.norm() + f_xx.norm() + f_zz.norm());
    (r1, r2)
}

/// Trapezoid nodes and weights on `[x - length, x]`, spaced `h0` at `x` and
/// growing by `ratio` per step up to `h_max`.
pub fn graded_trapezoid(x: f64, length: f64, h0: f64, ratio: f64, h_max: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![x];
    let mut h = h0;
    let lo = x - length;
    while *nodes.last().unwrap() > lo {
        let next = (nodes.last().unwrap() - h).max(lo);
        nodes.push(next);
        h = (h * ratio).min(h_max);
    }
    let n = nodes.len();
    let mut weights = alloc::vec![0.0; n];
    for k in 0..n - 1 {
        let d = nodes[k] - nodes[k + 1];
        weights[k] += 0.5 * d;
        weights[k + 1] += 0.5 * d;
    }
    (nodes, weights)
}

/// Smallest `Re k` over the rule nodes.
pub fn min_p(rule: &QuadratureRule) -> f64 {
    rule.nodes.iter().map(|k| k[0]).fold(f64::INFINITY, f64::min)
}

/// `|K(z, x) + int_{x - L}^x F(z, s) K(s, x) ds + F(z, x)| / |F(z, x)|` with
/// `K(z, x) = -sum E_i(z) e^{i q_i (z - x)} psi_i(x) g_i w_i`, `L = trunc / a`
/// and `a = min Re k`.
pub fn marchenko_residual(
    domain: &SpectralDomain,
    rule: &QuadratureRule,
    z: f64,
    x: f64,
    y: f64,
    t: f64,
    trunc: f64,
) -> Result<f64> {
    if !(z < x) {
        return Err(Error::BadArgument("marchenko residual needs z < x"));
    }
    let op = assemble_a(domain, rule, x, y, t)?;
    let sol = solve_psi(&op)?;
    let scale = op.log_scale();
    let psi_gw: Vec<Complex64> = sol.values.iter().zip(&op.gw).map(|(v, w)| v * (scale.exp() * w)).collect();
    let kernel = |s: f64| -> Complex64 {
        rule.nodes
            .iter()
            .zip(&psi_gw)
            .map(|(k, pg)| -pg * Complex64::from_polar(log_e_abs(k[0], k[1], s, y, t).exp(), k[1] * (s - x)))
            .sum()
    };
    let a = min_p(rule);
    let (nodes, weights) = graded_trapezoid(x, trunc / a, 1e-3, 1.02, 0.02);
    let integral: Complex64 = nodes.iter().zip(&weights).map(|(&s, w)| marchenko_f(rule, z, s, y, t) * kernel(s) * *w).sum();
    let fzx = marchenko_f(rule, z, x, y, t);
    Ok((kernel(z) + integral + fzx).norm() / fzx.norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayAudit {
    /// Least-squares slope of `log |u|` against `x`.
    pub slope: f64,
    pub min_local_slope: f64,
    pub max_local_slope: f64,
    /// `log |u|` has non-negative second differences (to rounding).
    pub convex: bool,
    /// `|u|` increases with `x` over the sample.
    pub monotone: bool,
}

/// Shape of `log |u|` on a sample ordered by increasing `x`.
pub fn decay_audit(xs: &[f64], us: &[f64]) -> DecayAudit {
    let lu: Vec<f64> = us.iter().map(|u| u.abs().ln()).collect();
    let local: Vec<f64> = xs.windows(2).zip(lu.windows(2)).map(|(x, l)| (l[1] - l[0]) / (x[1] - x[0])).collect();
    let tol = 1e-6 * local.iter().map(|s| s.abs()).fold(0.0, f64::max);
    DecayAudit {
        slope: fit_slope(xs, &lu),
        min_local_slope: local.iter().cloned().fold(f64::INFINITY, f64::min),
        max_local_slope: local.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        convex: local.windows(2).all(|w| w[1] >= w[0] - tol),
        monotone: lu.windows(2).all(|w| w[1] > w[0]),
    }
}

/// Which tier a grid came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum FieldSource {
    Exact,
    Degenerate,
    Theta,
    Train,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldGrid {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub t: f64,
    /// Row-major in `y`: `values[iy * nx + ix]`.
    pub values: Vec<f64>,
    pub source: FieldSource,
}

fn increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|a| a.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl FieldGrid {
    pub fn new(x_axis: Vec<f64>, y_axis: Vec<f64>, t: f64, values: Vec<f64>, source: FieldSource) -> Result<Self> {
        if !increasing(&x_axis) || !increasing(&y_axis) {
            return Err(Error::BadArgument("grid axes must be strictly increasing"));
        }
        if values.len() != x_axis.len() * y_axis.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadArgument("grid values must be finite and match the axes"));
        }
        Ok(FieldGrid { x_axis, y_axis, t, values, source })
    }

    /// Fills the grid from `f(x, y)`.
    pub fn from_fn<F: FnMut(f64, f64) -> f64>(x_axis: Vec<f64>, y_axis: Vec<f64>, t: f64, source: FieldSource, mut f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(x_axis.len() * y_axis.len());
        for &y in &y_axis {
            for &x in &x_axis {
                values.push(f(x, y));
            }
        }
        Self::new(x_axis, y_axis, t, values, source)
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.x_axis.len() + ix]
    }
}

/// Rectangle `[x_lo, x_hi] x [y_lo, y_hi]`; infinite bounds are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Window {
    pub fn all() -> Self {
        Window { x_lo: f64::NEG_INFINITY, x_hi: f64::INFINITY, y_lo: f64::NEG_INFINITY, y_hi: f64::INFINITY }
    }

    pub fn x_range(lo: f64, hi: f64) -> Self {
        Window { x_lo: lo, x_hi: hi, ..Self::all() }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi && y >= self.y_lo && y <= self.y_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompareMetrics {
    pub sup: f64,
    /// Discrete L² norm of `A - B` with trapezoid weights along each axis
    /// (an axis with a single point carries weight 1).
    pub l2: f64,
    /// Location of `max A` and of `max B` in the window.
    pub argmax_a: [f64; 2],
    pub argmax_b: [f64; 2],
    /// Distance between the two maxima.
    pub max_shift: f64,
    pub points: usize,
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    if n == 1 {
        return alloc::vec![1.0];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

pub fn compare_fields(a: &FieldGrid, b: &FieldGrid, window: Window) -> Result<CompareMetrics> {
    if a.x_axis != b.x_axis || a.y_axis != b.y_axis {
        return Err(Error::AxisMismatch);
    }
    let wx = trapezoid_weights(&a.x_axis);
    let wy = trapezoid_weights(&a.y_axis);
    let (mut sup, mut l2, mut points) = (0.0f64, 0.0, 0);
    let (mut best_a, mut best_b) = ((f64::NEG_INFINITY, [0.0; 2]), (f64::NEG_INFINITY, [0.0; 2]));
    for (iy, &y) in a.y_axis.iter().enumerate() {
        for (ix, &x) in a.x_axis.iter().enumerate() {
            if !window.contains(x, y) {
                continue;
            }
            let (va, vb) = (a.get(ix, iy), b.get(ix, iy));
            let d = (va - vb).abs();
            sup = sup.max(d);
            l2 += d * d * wx[ix] * wy[iy];
            points += 1;
            if va > best_a.0 {
                best_a = (va, [x, y]);
            }
            if vb > best_b.0 {
                best_b = (vb, [x, y]);
            }
        }
    }
    let shift = (best_a.1[0] - best_b.1[0]).hypot(best_a.1[1] - best_b.1[1]);
    Ok(CompareMetrics { sup, l2: l2.sqrt(), argmax_a: best_a.1, argmax_b: best_b.1, max_shift: shift, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_quadrature;
    use crate::fredholm::{adapted_rule, AdaptedOptions};
    use crate::phase::frame_at;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const SPACINGS: [f64; 4] = [0.05, 0.025, 0.0125, 0.00625];

    #[test]
    fn zero_field_has_zero_residual() {
        assert_eq!(kp_residual(|_, _, _| 0.0, 0.3, 0.1, 1.0, 0.01, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn step_guard() {
        assert!(matches!(kp_residual(|_, _, _| 0.0, 0.0, 0.0, 1.0, 0.2, 1.0), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn one_soliton_converges_at_second_order() {
        let p0 = 1.673;
        let rep = residual_study(one_soliton(p0), 0.4, 0.0, 0.3, &SPACINGS, p0).unwrap();
        let order = rep.order.unwrap();
        assert!((1.8..=2.3).contains(&order), "order {order}, {:?}", rep.residuals);
    }

    #[test]
    fn wrong_sign_of_alpha_is_visible() {
        // A small oblique plane wave of the linearized equation: with alpha^2 = -1 the
        // residual vanishes; flipping the sign of the y-term leaves a finite remainder.
        let (kx, ky) = (1.2f64, 0.7f64);
        let omega = -(kx.powi(4) / 4.0 - 0.75 * ky * ky) / kx;
        let u = move |x: f64, y: f64, t: f64| 1e-9 * (kx * x + ky * y + omega * t).exp();
        let terms = kp_terms(u, 0.1, 0.2, 0.3, 0.02);
        let flipped = terms.residual() - 1.5 * ALPHA_SQ * terms.u_yy;
        assert!(terms.residual().abs() < 1e-4 * terms.scale(), "{terms:?}");
        assert!(flipped.abs() > 0.1 * terms.scale());
    }

    #[test]
    fn marchenko_equations_hold() {
        let d = SpectralDomain::default_circle();
        let rule = build_quadrature(&d, 12, 24).unwrap();
        let f = frame_at(&d, 0.5).unwrap();
        let t = 10.0;
        let x = f.c * t;
        let (r1, r2) = marchenko_pde_residuals(&rule, x - 3.0, x, 0.5 * t, t, 5e-3);
        assert!(r1 < 1e-5 && r2 < 1e-5, "{r1} {r2}");
        let diag = marchenko_f(&rule, x, x, 0.5 * t, t);
        assert!(diag.re > 0.0 && diag.im.abs() <= 1e-14 * diag.re);
    }

    #[test]
    fn marchenko_residual_small_and_truncation_stable() {
        let d = SpectralDomain::default_circle();
        let f = frame_at(&d, 0.5).unwrap();
        let t = 10.0;
        let rule = adapted_rule(&d, &f, 0.0, t, AdaptedOptions { m: 4, ..Default::default() });
        let x = f.c * t;
        let a = marchenko_residual(&d, &rule, x - 3.0, x, 0.5 * t, t, 40.0).unwrap();
        let b = marchenko_residual(&d, &rule, x - 3.0, x, 0.5 * t, t, 50.0).unwrap();
        assert!(a < 1e-4, "{a}");
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn trapezoid_integrates_exponential() {
        let (s, w) = graded_trapezoid(0.0, 40.0, 1e-3, 1.02, 0.02);
        let v: f64 = s.iter().zip(&w).map(|(s, w)| w * (2.0 * s).exp()).sum();
        assert_relative_eq!(v, 0.5, max_relative = 1e-4);
    }

    #[test]
    fn decay_of_log_sum_exp_is_convex() {
        let xs: Vec<f64> = (0..20).map(|i| -30.0 + i as f64).collect();
        let us: Vec<f64> = xs.iter().map(|x| (2.0 * x).exp() + 0.3 * (3.0 * x).exp()).collect();
        let a = decay_audit(&xs, &us);
        assert!(a.convex && a.monotone);
        assert!(a.min_local_slope >= 2.0 && a.max_local_slope <= 3.0);
    }

    #[test]
    fn compare_identical_and_mismatched() {
        let xs = alloc::vec![0.0, 0.5, 1.0];
        let ys = alloc::vec![0.0, 1.0];
        let a = FieldGrid::from_fn(xs.clone(), ys.clone(), 1.0, FieldSource::Theta, |x, y| x + y).unwrap();
        let m = compare_fields(&a, &a, Window::all()).unwrap();
        assert_eq!((m.sup, m.l2, m.max_shift), (0.0, 0.0, 0.0));
        let b = FieldGrid::from_fn(alloc::vec![0.0, 0.5, 2.0], ys, 1.0, FieldSource::Train, |x, _| x).unwrap();
        assert_eq!(compare_fields(&a, &b, Window::all()), Err(Error::AxisMismatch));
        assert!(FieldGrid::new(alloc::vec![1.0, 0.0], alloc::vec![0.0], 1.0, alloc::vec![0.0, 0.0], FieldSource::Exact).is_err());
    }

    #[test]
    fn compare_shifted_peak() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64 * 0.1).collect();
        let ys = alloc::vec![0.0];
        let a = FieldGrid::from_fn(xs.clone(), ys.clone(), 1.0, FieldSource::Theta, |x, _| (-(x - 4.0) * (x - 4.0)).exp()).unwrap();
        let b = FieldGrid::from_fn(xs, ys, 1.0, FieldSource::Train, |x, _| (-(x - 4.5) * (x - 4.5)).exp()).unwrap();
        let m = compare_fields(&a, &b, Window::x_range(2.0, 8.0)).unwrap();
        assert_relative_eq!(m.max_shift, 0.5, epsilon = 1e-12);
        assert!(m.sup > 0.2);
    }

    proptest! {
        #[test]
        fn metrics_nonnegative(vals in proptest::collection::vec(-5.0f64..5.0, 12), other in proptest::collection::vec(-5.0f64..5.0, 12)) {
            let xs: Vec<f64> = (0..4).map(|i| i as f64).collect();
            let ys: Vec<f64> = (0..3).map(|i| i as f64).collect();
            let a = FieldGrid::new(xs.clone(), ys.clone(), 2.0, vals, FieldSource::Exact).unwrap();
            let b = FieldGrid::new(xs, ys, 2.0, other, FieldSource::Degenerate).unwrap();
            let m = compare_fields(&a, &b, Window::all()).unwrap();
            prop_assert!(m.sup >= 0.0 && m.l2 >= 0.0 && m.max_shift >= 0.0);
            prop_assert_eq!(m, compare_fields(&a, &b, Window::all()).unwrap());
        }

        #[test]
        fn soliton_residual_small_anywhere(x in -3.0f64..3.0, t in -1.0f64..1.0, p0 in 0.5f64..2.0) {
            let h = 0.01 / p0;
            let terms = kp_terms(one_soliton(p0), x, 0.0, t, h);
            prop_assert!(terms.residual().abs() <= 1e-3 * terms.scale().max(1e-300));
        }
    }
}
