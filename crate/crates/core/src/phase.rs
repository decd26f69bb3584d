//! The phase `f(p, q, Y) = p^2 - 3 q^2 - 2 q Y`, the exponent of `E`, the
//! boundary minimizer `k0(Y)` and the local geometry attached to it.
//!
//! Local coordinates near `k0`: `r = F(p, q) = 2 p (f - C(Y))` and the
//! tangential offset `s = tau . (k - k0)`, where `tau` is the unit
//! counterclockwise tangent of the boundary at `k0`.

use core::f64::consts::TAU;
use num_complex::Complex64;
use num_traits::{Euclid, Float};

use crate::domain::{boundary_point, curvature_at, wrap_angle, BoundarySpec, SpectralDomain};
use crate::optimize::golden_section;
use crate::{Error, Result};

pub const SCAN_POINTS: usize = 2048;

/// Offset along the common tangent used to decide on which side of it the
/// boundary and the level curve of `f` lie.
pub const SIDE_OFFSET: f64 = 1e-3;

#[inline]
pub fn phase_f(p: f64, q: f64, y_ratio: f64) -> f64 {
    p * p - 3.0 * q * q - 2.0 * q * y_ratio
}

/// `log E = p (x - f(p, q, Y) t)`.
#[inline]
pub fn log_e(p: f64, q: f64, x: f64, t: f64, y_ratio: f64) -> f64 {
    p * (x - phase_f(p, q, y_ratio) * t)
}

/// `f(p, q, Y) - f(p0, q0, Y)` in factored form, free of cancellation.
#[inline]
pub fn phase_diff(p: f64, q: f64, p0: f64, q0: f64, y_ratio: f64) -> f64 {
    (p - p0) * (p + p0) - 3.0 * (q - q0) * (q + q0) - 2.0 * y_ratio * (q - q0)
}

/// `log E` written as `p (xi - (f - f0) t)` with `x = f0 t + xi`,
/// `f0 = f(p0, q0, Y)`.
#[inline]
pub fn log_e_rel(p: f64, q: f64, k_ref: [f64; 2], xi: f64, t: f64, y_ratio: f64) -> f64 {
    p * (xi - phase_diff(p, q, k_ref[0], k_ref[1], y_ratio) * t)
}

/// `grad f` at `(p, q)`.
#[inline]
pub fn grad_f(p: f64, q: f64, y_ratio: f64) -> [f64; 2] {
    [2.0 * p, -6.0 * q - 2.0 * y_ratio]
}

/// Curvature of the level curve of `f` through `(p, q)`.
pub fn level_curvature(p: f64, q: f64, y_ratio: f64) -> f64 {
    let [fp, fq] = grad_f(p, q, y_ratio);
    let (fpp, fqq, fpq) = (2.0, -6.0, 0.0);
    let g = fp.hypot(fq);
    (fq * fq * fpp - 2.0 * fp * fq * fpq + fp * fp * fqq).abs() / (g * g * g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinimizerFrame {
    pub y_ratio: f64,
    /// Boundary parameter of `k0`.
    pub theta0: f64,
    pub k0: [f64; 2],
    /// `C(Y) = f(k0, Y)`, the speed of the train.
    pub c: f64,
    pub grad_f: [f64; 2],
    /// `|grad F|` at `k0`, equal to `2 p0 |grad f|`.
    pub grad_big_f: f64,
    pub kappa_hat: f64,
    pub kappa: f64,
    pub same_side: bool,
    pub alpha0: f64,
    /// Unit counterclockwise tangent, the `s` direction.
    pub tangent: [f64; 2],
    /// Unit normal `grad F / |grad F|`, pointing into the domain.
    pub normal: [f64; 2],
    pub h0: Complex64,
    pub w0: f64,
    pub g0: f64,
}

impl MinimizerFrame {
    pub fn p0(&self) -> f64 {
        self.k0[0]
    }

    pub fn q0(&self) -> f64 {
        self.k0[1]
    }

    /// `F(p, q) = 2 p (f(p, q, Y) - C)`.
    pub fn big_f(&self, p: f64, q: f64) -> f64 {
        2.0 * p * phase_diff(p, q, self.k0[0], self.k0[1], self.y_ratio)
    }

    pub fn grad_big_f_at(&self, p: f64, q: f64) -> [f64; 2] {
        let d = phase_diff(p, q, self.k0[0], self.k0[1], self.y_ratio);
        let [fp, fq] = grad_f(p, q, self.y_ratio);
        [2.0 * d + 2.0 * p * fp, 2.0 * p * fq]
    }

    /// `xi = x - C t`.
    pub fn xi(&self, x: f64, t: f64) -> f64 {
        x - self.c * t
    }

    pub fn tangent_complex(&self) -> Complex64 {
        Complex64::new(self.tangent[0], self.tangent[1])
    }
}

/// Unique global minimizer of `f(., Y)` over the closed domain, as
/// `(theta0, f_min)`.
///
/// The only critical point of `f` has `p = 0`, outside the domain, so the
/// minimum sits on the boundary.
pub fn find_k0(domain: &SpectralDomain, y_ratio: f64) -> Result<(f64, f64)> {
    find_k0_with_offset(domain, y_ratio, 0.0)
}

/// [`find_k0`] with the scan grid shifted by `offset` grid cells.
pub fn find_k0_with_offset(domain: &SpectralDomain, y_ratio: f64, offset: f64) -> Result<(f64, f64)> {
    let spec = &domain.boundary;
    let fb = |th: f64| {
        let k = boundary_point(spec, th);
        phase_f(k[0], k[1], y_ratio)
    };
    let h = TAU / SCAN_POINTS as f64;
    let vals: alloc::vec::Vec<f64> = (0..SCAN_POINTS).map(|i| fb((i as f64 + offset) * h)).collect();
    let mut minima: alloc::vec::Vec<(f64, f64)> = alloc::vec::Vec::new();
    for i in 0..SCAN_POINTS {
        let prev = vals[(i + SCAN_POINTS - 1) % SCAN_POINTS];
        let next = vals[(i + 1) % SCAN_POINTS];
        if vals[i] <= prev && vals[i] < next {
            let center = (i as f64 + offset) * h;
            let (th, _) = golden_section(fb, center - h, center + h, 1e-12);
            let th = polish(spec, y_ratio, th);
            minima.push((Euclid::rem_euclid(&th, &TAU), fb(th)));
        }
    }
    if minima.is_empty() {
        return Err(Error::DegenerateFrame("phase is constant on the boundary"));
    }
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (th0, c) = minima[0];
    for &(th, v) in &minima[1..] {
        let gap = v - c;
        if gap <= 1e-8 * (1.0 + c.abs()) && wrap_angle(th - th0).abs() > 1e-3 {
            return Err(Error::NonUniqueMinimizer { first: th0, second: th, gap });
        }
    }
    Ok((th0, c))
}

/// Newton steps on `d/dtheta f(Gamma(theta))`.
fn polish(spec: &BoundarySpec, y_ratio: f64, mut th: f64) -> f64 {
    let start = th;
    for _ in 0..8 {
        let (k, d1, d2) = spec.jet(th);
        let [fp, fq] = grad_f(k[0], k[1], y_ratio);
        let g1 = fp * d1[0] + fq * d1[1];
        let g2 = 2.0 * d1[0] * d1[0] - 6.0 * d1[1] * d1[1] + fp * d2[0] + fq * d2[1];
        if g2 <= 0.0 {
            return start;
        }
        let step = g1 / g2;
        th -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if (th - start).abs() > 1e-6 { start } else { th }
}

/// Offset along `normal` of the boundary point whose tangential coordinate is `s`.
fn boundary_offset(spec: &BoundarySpec, theta0: f64, k0: [f64; 2], tau: [f64; 2], nu: [f64; 2], s: f64) -> f64 {
    let (_, d1, _) = spec.jet(theta0);
    let mut th = theta0 + s / d1[0].hypot(d1[1]);
    for _ in 0..50 {
        let (k, d, _) = spec.jet(th);
        let val = tau[0] * (k[0] - k0[0]) + tau[1] * (k[1] - k0[1]) - s;
        let der = tau[0] * d[0] + tau[1] * d[1];
        let step = val / der;
        th -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    let k = boundary_point(spec, th);
    nu[0] * (k[0] - k0[0]) + nu[1] * (k[1] - k0[1])
}

/// Offset along `normal` of the level curve `f = f(k0)` at tangential
/// coordinate `s`. `f` is quadratic along the normal, so this is exact.
fn level_offset(k0: [f64; 2], tau: [f64; 2], nu: [f64; 2], y_ratio: f64, s: f64) -> f64 {
    let base = [k0[0] + s * tau[0], k0[1] + s * tau[1]];
    let a = nu[0] * nu[0] - 3.0 * nu[1] * nu[1];
    let [gp, gq] = grad_f(base[0], base[1], y_ratio);
    let b = gp * nu[0] + gq * nu[1];
    let d = phase_diff(base[0], base[1], k0[0], k0[1], y_ratio);
    let disc = (b * b - 4.0 * a * d).max(0.0).sqrt();
    let denom = -b - disc.copysign(b);
    if denom == 0.0 { 0.0 } else { 2.0 * d / denom }
}

/// Full frame at `Y`.
pub fn frame_at(domain: &SpectralDomain, y_ratio: f64) -> Result<MinimizerFrame> {
    let (theta0, _) = find_k0(domain, y_ratio)?;
    frame_from_theta(domain, y_ratio, theta0)
}

/// Frame at a given boundary parameter, assumed to be the minimizer.
pub fn frame_from_theta(domain: &SpectralDomain, y_ratio: f64, theta0: f64) -> Result<MinimizerFrame> {
    let spec = &domain.boundary;
    let (k0, d1, _) = spec.jet(theta0);
    let (p0, q0) = (k0[0], k0[1]);
    let c = phase_f(p0, q0, y_ratio);
    let gf = grad_f(p0, q0, y_ratio);
    let gnorm = gf[0].hypot(gf[1]);
    if gnorm < 1e-10 {
        return Err(Error::DegenerateFrame("grad f vanishes at k0"));
    }
    let grad_big_f = 2.0 * p0 * gnorm;
    let speed = d1[0].hypot(d1[1]);
    let tau = [d1[0] / speed, d1[1] / speed];
    let nu = [gf[0] / gnorm, gf[1] / gnorm];
    let inward = [-tau[1], tau[0]];
    if nu[0] * inward[0] + nu[1] * inward[1] <= 0.0 {
        return Err(Error::DegenerateFrame("grad f does not point into the domain"));
    }
    let kappa_hat = curvature_at(spec, theta0);
    let kappa = level_curvature(p0, q0, y_ratio);

    let h = SIDE_OFFSET;
    let second = |off: &dyn Fn(f64) -> f64| (off(h) + off(-h)) / (2.0 * h * h);
    let c_gamma = second(&|s| boundary_offset(spec, theta0, k0, tau, nu, s));
    let c_level = second(&|s| level_offset(k0, tau, nu, y_ratio, s));
    let same_side = c_gamma.signum() == c_level.signum();
    let alpha0 = if same_side {
        grad_big_f * (kappa_hat - kappa) / 2.0
    } else {
        grad_big_f * (kappa_hat + kappa) / 2.0
    };
    if !(alpha0 > 0.0) {
        return Err(Error::DegenerateFrame("alpha0 <= 0"));
    }

    // Jacobian of (r, s) = (F, tau . (k - k0)) with respect to (p, q) at k0.
    let gbf = [2.0 * p0 * gf[0], 2.0 * p0 * gf[1]];
    let det = gbf[0] * tau[1] - gbf[1] * tau[0];
    let w0 = 1.0 / det;

    Ok(MinimizerFrame {
        y_ratio,
        theta0,
        k0,
        c,
        grad_f: gf,
        grad_big_f,
        kappa_hat,
        kappa,
        same_side,
        alpha0,
        tangent: tau,
        normal: nu,
        h0: Complex64::new(tau[0], tau[1]) / alpha0,
        w0,
        g0: domain.g(p0, q0),
    })
}

/// Reference point for exponent differences at `Y`: the frame minimizer when
/// it is unique, otherwise the smallest boundary sample.
pub fn reference_point(domain: &SpectralDomain, y_ratio: f64) -> [f64; 2] {
    match find_k0(domain, y_ratio) {
        Ok((th, _)) => boundary_point(&domain.boundary, th),
        Err(_) => {
            let mut best = (f64::INFINITY, [0.0, 0.0]);
            for i in 0..SCAN_POINTS {
                let k = boundary_point(&domain.boundary, TAU * i as f64 / SCAN_POINTS as f64);
                let v = phase_f(k[0], k[1], y_ratio);
                if v < best.0 {
                    best = (v, k);
                }
            }
            best.1
        }
    }
}
