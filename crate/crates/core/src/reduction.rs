//! Degenerate-kernel reduction near `k0`.
//!
//! `1 / (lambda + conj(k)) = sum C_ij (lambda - k0)^i (conj(k) - conj(k0))^j`
//! with `C_ij = (-1)^(i+j) (i+j)! / (i! j! (2 p0)^(i+j+1))`, converging on the
//! polydisk of radius `p0` about `k0`. Truncating at order `N` on a thin
//! boundary sliver `G` reduces the integral equation to an `(N+1) x (N+1)`
//! system in the moments
//! `J_lj = int_G E^2 (k - k0)^l (conj(k) - conj(k0))^j g dp dq`.
//!
//! `G = {0 < r < eps0, s_-(r) < s < s_+(r)}` in the chart
//! `k = k0 + s tau + n(r, s) nu` with `F(k) = r`.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{Float, One, Zero};

use crate::domain::{boundary_point, SpectralDomain};
use crate::linalg::{bareiss_det, Lu};
use crate::optimize::brent_root;
use crate::phase::MinimizerFrame;
use crate::quad::gl_interval;
use crate::{Error, Result};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 8;
/// Moments are integrated up to `r` where `E^2` has dropped by `exp(-MOMENT_WINDOW)`.
pub const MOMENT_WINDOW: f64 = 50.0;

fn binomial(n: usize, k: usize) -> f64 {
    if n > 60 {
        let ln = libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0);
        return ln.exp();
    }
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b.round()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    /// Truncation order `N`; the matrix is `(N+1) x (N+1)`.
    pub order: usize,
    pub p0: f64,
    pub entries: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn dim(&self) -> usize {
        self.order + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }
}

pub fn c_matrix(order: usize, p0: f64) -> CoefficientMatrix {
    let d = order + 1;
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            entries.push(sign * binomial(i + j, i) / (2.0 * p0).powi((i + j + 1) as i32));
        }
    }
    CoefficientMatrix { order, p0, entries }
}

#[derive(Debug, Clone)]
pub struct SubdomainSpec {
    pub domain: SpectralDomain,
    pub frame: MinimizerFrame,
    pub order: usize,
    pub eps0: f64,
    /// `alpha0 p0^2 / (16 N^2 |grad p|^2)` at `k0`.
    pub eps0_bound: f64,
    /// `2 |grad p| sqrt(eps0 / alpha0)`.
    pub delta0: f64,
    /// `max |k - k0|` over `G`.
    pub radius: f64,
    /// `max |p - p0|` over `G`.
    pub p_spread: f64,
}

impl SubdomainSpec {
    /// Point of the chart with `F = r` and tangential offset `s`.
    pub fn point(&self, r: f64, s: f64) -> Option<[f64; 2]> {
        chart_point(&self.frame, r, s)
    }

    /// `(s_-(r), s_+(r))`, where the level curve `F = r` meets the boundary.
    pub fn s_hat(&self, r: f64) -> Option<(f64, f64)> {
        Some((branch(&self.domain, &self.frame, r, -1.0)?, branch(&self.domain, &self.frame, r, 1.0)?))
    }

    /// `|w| = 1 / |det d(r, s) / d(p, q)|` at `k`.
    pub fn jacobian(&self, k: [f64; 2]) -> f64 {
        chart_jacobian(&self.frame, k)
    }
}

fn chart_point(frame: &MinimizerFrame, r: f64, s: f64) -> Option<[f64; 2]> {
    let (tau, nu) = (frame.tangent, frame.normal);
    let base = [frame.k0[0] + s * tau[0], frame.k0[1] + s * tau[1]];
    let mut n = (r - frame.big_f(base[0], base[1])) / frame.grad_big_f;
    for _ in 0..60 {
        let k = [base[0] + n * nu[0], base[1] + n * nu[1]];
        let val = frame.big_f(k[0], k[1]) - r;
        let g = frame.grad_big_f_at(k[0], k[1]);
        let der = g[0] * nu[0] + g[1] * nu[1];
        if der <= 0.0 {
            return None;
        }
        let step = val / der;
        n -= step;
        if step.abs() <= 1e-15 * (1.0 + n.abs()) {
            return Some([base[0] + n * nu[0], base[1] + n * nu[1]]);
        }
    }
    None
}

fn chart_jacobian(frame: &MinimizerFrame, k: [f64; 2]) -> f64 {
    let g = frame.grad_big_f_at(k[0], k[1]);
    1.0 / (g[0] * frame.tangent[1] - g[1] * frame.tangent[0]).abs()
}

/// Tangential coordinate of the boundary point on side `side` of `k0` with `F = r`.
fn branch(domain: &SpectralDomain, frame: &MinimizerFrame, r: f64, side: f64) -> Option<f64> {
    let spec = &domain.boundary;
    let rg = |th: f64| {
        let k = boundary_point(spec, th);
        frame.big_f(k[0], k[1]) - r
    };
    let (_, d1, _) = spec.jet(frame.theta0);
    let speed = d1[0].hypot(d1[1]);
    let mut step = 2.0 * (r / frame.alpha0).sqrt() / speed;
    let th = loop {
        if step > core::f64::consts::PI {
            return None;
        }
        let end = frame.theta0 + side * step;
        if rg(end) > 0.0 {
            let (a, b) = if side > 0.0 { (frame.theta0, end) } else { (end, frame.theta0) };
            break brent_root(rg, a, b, 1e-15)?;
        }
        step *= 2.0;
    };
    let k = boundary_point(spec, th);
    Some(frame.tangent[0] * (k[0] - frame.k0[0]) + frame.tangent[1] * (k[1] - frame.k0[1]))
}

/// Checks that the chart covers `{F < eps}` near `k0` cleanly: boundary
/// crossings exist and move outward with `r`, `F` grows monotonically along
/// the boundary away from `k0`, and chart points stay in the domain.
/// Returns `max |k - k0|` and `max |p - p0|` over the sampled region.
fn chart_checks(domain: &SpectralDomain, frame: &MinimizerFrame, eps: f64) -> Option<(f64, f64)> {
    let spec = &domain.boundary;
    let mut prev = (0.0, 0.0);
    let (mut radius, mut spread) = (0.0f64, 0.0f64);
    for i in 1..=16 {
        let r = eps * i as f64 / 16.0;
        let lo = branch(domain, frame, r, -1.0)?;
        let hi = branch(domain, frame, r, 1.0)?;
        if !(lo < prev.0 && hi > prev.1) {
            return None;
        }
        prev = (lo, hi);
        for j in 0..=16 {
            let s = lo + (hi - lo) * j as f64 / 16.0;
            let k = chart_point(frame, r, s)?;
            let inside = domain.contains(k) || j == 0 || j == 16;
            if !inside {
                return None;
            }
            radius = radius.max((k[0] - frame.k0[0]).hypot(k[1] - frame.k0[1]));
            spread = spread.max((k[0] - frame.k0[0]).abs());
        }
    }
    // Monotone growth of F along the boundary up to the crossings at eps.
    let (_, d1, _) = spec.jet(frame.theta0);
    let speed = d1[0].hypot(d1[1]);
    for side in [-1.0, 1.0] {
        let mut last = 0.0;
        let reach = 4.0 * (eps / frame.alpha0).sqrt() / speed;
        for i in 1..=64 {
            let th = frame.theta0 + side * reach * i as f64 / 64.0;
            let k = boundary_point(spec, th);
            let v = frame.big_f(k[0], k[1]);
            if v >= eps {
                break;
            }
            if v <= last {
                return None;
            }
            last = v;
        }
    }
    Some((radius, spread))
}

/// Builds `G_{N,Y}`: starts from the bound on `eps0`, then halves it until
/// `G` sits inside the half-radius polydisk and the chart checks pass.
pub fn subdomain_spec(domain: &SpectralDomain, frame: &MinimizerFrame, order: usize) -> Result<SubdomainSpec> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::BadArgument("order must be in 1..=8"));
    }
    let p0 = frame.p0();
    let dp_ds = frame.tangent[0];
    let dp_dr = frame.normal[0] / frame.grad_big_f;
    let grad_p = dp_ds.hypot(dp_dr);
    let nf = order as f64;
    let eps0_bound = frame.alpha0 * p0 * p0 / (16.0 * nf * nf * grad_p * grad_p);
    let mut eps = eps0_bound;
    for _ in 0..80 {
        if let Some((radius, spread)) = chart_checks(domain, frame, eps) {
            if radius < 0.5 * p0 {
                return Ok(SubdomainSpec {
                    domain: domain.clone(),
                    frame: *frame,
                    order,
                    eps0: eps,
                    eps0_bound,
                    delta0: 2.0 * grad_p * (eps / frame.alpha0).sqrt(),
                    radius,
                    p_spread: spread,
                });
            }
        }
        eps *= 0.5;
    }
    Err(Error::DegenerateFrame("no admissible eps0"))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentMatrix {
    pub order: usize,
    pub xi: f64,
    pub y_ratio: f64,
    pub t: f64,
    /// `J_lj`, row-major.
    pub j: Vec<Complex64>,
    /// `d J_lj / dx`, which carries an extra `2 p` under the integral.
    pub jx: Vec<Complex64>,
}

impl MomentMatrix {
    pub fn dim(&self) -> usize {
        self.order + 1
    }

    pub fn get(&self, l: usize, j: usize) -> Complex64 {
        self.j[l * self.dim() + j]
    }

    /// The row `(J_0, ..., J_N)` with `J_j = J_0j`.
    pub fn first_row(&self) -> Vec<Complex64> {
        self.j[..self.dim()].to_vec()
    }
}

/// `J_lj` by Gauss–Legendre in `v = sqrt(r)` and in `s`, `m` nodes each,
/// with the Jacobian of the chart.
pub fn moments(spec: &SubdomainSpec, xi: f64, t: f64, m: usize) -> Result<MomentMatrix> {
    if !(t > 0.0) {
        return Err(Error::TimeZero);
    }
    let frame = &spec.frame;
    let d = spec.order + 1;
    let p0 = frame.p0();
    let k0 = Complex64::new(frame.k0[0], frame.k0[1]);
    let r_max = spec.eps0.min((MOMENT_WINDOW + 2.0 * xi.abs() * spec.p_spread) / t);
    let (v, wv) = gl_interval(m, 0.0, r_max.sqrt());
    let mut j = alloc::vec![Complex64::zero(); d * d];
    let mut jx = alloc::vec![Complex64::zero(); d * d];
    let mut zp = alloc::vec![Complex64::one(); d];
    let mut zc = alloc::vec![Complex64::one(); d];
    for (&vi, &wvi) in v.iter().zip(&wv) {
        let r = vi * vi;
        let (lo, hi) = spec.s_hat(r).ok_or(Error::DegenerateFrame("boundary crossing not found"))?;
        let (s, ws) = gl_interval(m, lo, hi);
        for (&si, &wsi) in s.iter().zip(&ws) {
            let k = spec.point(r, si).ok_or(Error::DegenerateFrame("chart point did not converge"))?;
            let w = wvi * 2.0 * vi * wsi * spec.jacobian(k)
                * spec.domain.g(k[0], k[1])
                * (2.0 * (k[0] - p0) * xi - r * t).exp();
            let z = Complex64::new(k[0], k[1]) - k0;
            for a in 1..d {
                zp[a] = zp[a - 1] * z;
                zc[a] = zc[a - 1] * z.conj();
            }
            let wx = w * 2.0 * k[0];
            for l in 0..d {
                for c in 0..d {
                    let mono = zp[l] * zc[c];
                    j[l * d + c] += mono * w;
                    jx[l * d + c] += mono * wx;
                }
            }
        }
    }
    let anchor = (2.0 * p0 * xi).exp();
    for v in j.iter_mut().chain(jx.iter_mut()) {
        *v *= anchor;
    }
    Ok(MomentMatrix { order: spec.order, xi, y_ratio: frame.y_ratio, t, j, jx })
}

fn system(c: &CoefficientMatrix, mm: &MomentMatrix) -> Vec<Complex64> {
    let d = c.dim();
    assert_eq!(d, mm.dim(), "orders differ");
    let mut m = alloc::vec![Complex64::zero(); d * d];
    for i in 0..d {
        for jj in 0..d {
            let mut s = Complex64::zero();
            for l in 0..d {
                s += c.get(i, l) * mm.get(l, jj);
            }
            m[i * d + jj] = s;
        }
        m[i * d + i] += 1.0;
    }
    m
}

fn inverse(d: usize, lu: &Lu) -> Vec<Complex64> {
    let mut inv = alloc::vec![Complex64::zero(); d * d];
    for col in 0..d {
        let mut e = alloc::vec![Complex64::zero(); d];
        e[col] = Complex64::one();
        lu.solve(&mut e);
        for row in 0..d {
            inv[row * d + col] = e[row];
        }
    }
    inv
}

fn real(z: Complex64) -> Result<f64> {
    if z.im.abs() > crate::fredholm::REALITY_TOL * z.re.abs() + f64::MIN_POSITIVE {
        return Err(Error::RealityViolated { re: z.re, im: z.im });
    }
    Ok(z.re)
}

/// `(psi_N, e)` as `d/dC00 log det(I + C J) = [J (I + C J)^{-1}]_00`.
pub fn psin_inner_logdet(c: &CoefficientMatrix, mm: &MomentMatrix) -> Result<f64> {
    Ok(degenerate_values(c, mm)?.inner)
}

/// `(psi_N, e) = F / D`: `D = det(I + C J)` and `F` the same determinant with
/// its first row replaced by `row`.
pub fn psin_inner_rowrep(c: &CoefficientMatrix, mm: &MomentMatrix, row: &[Complex64]) -> Result<f64> {
    let d = c.dim();
    let m = system(c, mm);
    let (log_d, ph_d) = Lu::new(d, m.clone()).map_err(|_| Error::SingularDn)?.log_det();
    if !log_d.is_finite() {
        return Err(Error::SingularDn);
    }
    let mut f = m;
    f[..d].copy_from_slice(&row[..d]);
    let val = match Lu::new(d, f) {
        Ok(lu) => {
            let (log_f, ph_f) = lu.log_det();
            ph_f / ph_d * (log_f - log_d).exp()
        }
        Err(_) => Complex64::zero(),
    };
    real(val)
}

/// `D^(N) = det(I + C J)`, real and at least 1 for a positive moment matrix.
pub fn d_n(c: &CoefficientMatrix, mm: &MomentMatrix) -> Result<Complex64> {
    let d = c.dim();
    Ok(Lu::new(d, system(c, mm)).map_err(|_| Error::SingularDn)?.det())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DegenerateValue {
    pub inner: f64,
    pub d_inner: f64,
    pub u: f64,
}

/// `(psi_N, e)`, its x-derivative
/// `[J_x M^{-1} - J M^{-1} C J_x M^{-1}]_00` with `M = I + C J`, and
/// `u_N = 2 d/dx (psi_N, e)`.
pub fn degenerate_values(c: &CoefficientMatrix, mm: &MomentMatrix) -> Result<DegenerateValue> {
    let d = c.dim();
    let lu = Lu::new(d, system(c, mm)).map_err(|_| Error::SingularDn)?;
    let inv = inverse(d, &lu);
    // Row 0 of J M^{-1} and of J_x M^{-1}.
    let row = |src: &[Complex64]| -> Vec<Complex64> {
        (0..d).map(|b| (0..d).map(|a| src[a] * inv[a * d + b]).sum()).collect()
    };
    let jm = row(&mm.j[..d]);
    let jxm = row(&mm.jx[..d]);
    // [J M^{-1} C J_x M^{-1}]_00 = sum_a jm[a] (C J_x M^{-1})_{a0}.
    let mut jxm_col0 = alloc::vec![Complex64::zero(); d];
    for a in 0..d {
        jxm_col0[a] = (0..d).map(|b| mm.jx[a * d + b] * inv[b * d]).sum();
    }
    let mut corr = Complex64::zero();
    for a in 0..d {
        let cjx: Complex64 = (0..d).map(|l| c.get(a, l) * jxm_col0[l]).sum();
        corr += jm[a] * cjx;
    }
    let inner = real(jm[0])?;
    let d_inner = real(jxm[0] - corr)?;
    Ok(DegenerateValue { inner, d_inner, u: 2.0 * d_inner })
}

/// Degenerate-tier field at frame-relative `(xi, t)`.
pub fn u_degenerate(spec: &SubdomainSpec, xi: f64, t: f64, m: usize) -> Result<DegenerateValue> {
    let mm = moments(spec, xi, t, m)?;
    degenerate_values(&c_matrix(spec.order, spec.frame.p0()), &mm)
}

/// `n x n` integer matrix `(i+j)! / (i! j!)` with `i, j` running from `start`.
pub fn pascal_matrix(n: usize, start: usize) -> Vec<i128> {
    let mut m = Vec::with_capacity(n * n);
    for i in start..start + n {
        for j in start..start + n {
            m.push(binomial_exact(i + j, i));
        }
    }
    m
}

fn binomial_exact(n: usize, k: usize) -> i128 {
    let k = k.min(n - k);
    let mut b: i128 = 1;
    for i in 0..k {
        b = b * (n - i) as i128 / (i + 1) as i128;
    }
    b
}

/// `(n det C0^(n), det C1^(n-1))`, exact.
pub fn fs_identity(n: usize) -> (i128, i128) {
    let c0 = bareiss_det(n, &pascal_matrix(n, 0));
    let c1 = bareiss_det(n - 1, &pascal_matrix(n - 1, 1));
    (n as i128 * c0, c1)
}

/// `det C^(n)` in exact rational arithmetic for rational `2 p0`.
pub fn det_c_exact(n: usize, two_p0: Ratio<i128>) -> Ratio<i128> {
    let mut m: Vec<Ratio<i128>> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            let pow = pow_ratio(two_p0, (i + j + 1) as u32);
            m.push(Ratio::from_integer(sign * binomial_exact(i + j, i)) / pow);
        }
    }
    rational_det(n, m)
}

/// `(2 p0)^(-n^2) det C0^(n)`, exact.
pub fn det_c_scaled_pascal(n: usize, two_p0: Ratio<i128>) -> Ratio<i128> {
    Ratio::from_integer(bareiss_det(n, &pascal_matrix(n, 0))) / pow_ratio(two_p0, (n * n) as u32)
}

fn pow_ratio(x: Ratio<i128>, e: u32) -> Ratio<i128> {
    (0..e).fold(Ratio::one(), |acc, _| acc * x)
}

fn rational_det(n: usize, mut m: Vec<Ratio<i128>>) -> Ratio<i128> {
    let mut det = Ratio::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !m[i * n + k].is_zero()) else {
            return Ratio::zero();
        };
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let piv = m[k * n + k];
        det *= piv;
        for i in k + 1..n {
            let f = m[i * n + k] / piv;
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let v = m[k * n + j];
                m[i * n + j] -= f * v;
            }
        }
    }
    det
}

/// `det C^(n)` in floating point with `C00` replaced by `c00`.
pub fn det_c_with_c00(n: usize, p0: f64, c00: f64) -> f64 {
    let c = c_matrix(n - 1, p0);
    let mut m: Vec<Complex64> = c.entries.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    m[0] = Complex64::new(c00, 0.0);
    Lu::new(n, m).map(|lu| lu.det().re).unwrap_or(0.0)
}
