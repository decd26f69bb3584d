//! Large-time asymptotics: the tau function `Delta_N`, the field
//! `u_theta = 2 d^2/dxi^2 log Delta_N` and the sech² soliton train.
//!
//! `Delta_N = 1 + sum_{n=1}^N R_n e^{2 p0 n xi} / t^{n(n+2)/2}` with
//! `R_n = det C^(n) det Gamma^(n)`, where `Gamma^(n)` holds the leading
//! large-`t` coefficients of the moments `J_ij`, `0 <= i, j < n`.
//!
//! The `n`-th ridge of `u_theta` sits where the `(n-1)`-st and `n`-th terms of
//! `Delta_N` balance:
//! `xi_n = ((n + 1/2) log t - log(R_n / R_{n-1})) / (2 p0)`.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::domain::SpectralDomain;
use crate::linalg::{bareiss_det, Lu};
use crate::optimize::golden_section_max;
use crate::phase::{frame_at, MinimizerFrame};
use crate::reduction::pascal_matrix;
use crate::{Error, Result};

/// Which closed form is used for the leading moment coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum GammaConvention {
    /// `(g0 |w0| / sqrt(alpha0)) eta^i conj(eta)^j c_{i+j}` with
    /// `eta = tau / sqrt(alpha0)`: the actual leading term of `J_ij`.
    #[default]
    Leading,
    /// `(g0 |w0| / alpha0) h0^i conj(h0)^j c_{i+j}` with `h0 = tau / alpha0`.
    AlphaScaled,
}

/// `c_m = Gamma((m+3)/2) (1 + (-1)^m) / (m + 1)`.
pub fn parity_coefficient(m: usize) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    2.0 * libm::tgamma((m as f64 + 3.0) / 2.0) / (m as f64 + 1.0)
}

/// Leading large-`t` coefficient of `J_ij`:
/// `J_ij ~ gamma_ij e^{2 p0 xi} / t^{(i+j+3)/2}`.
pub fn gamma_entry(frame: &MinimizerFrame, i: usize, j: usize, conv: GammaConvention) -> Complex64 {
    let tau = frame.tangent_complex();
    let (scale, h) = match conv {
        GammaConvention::Leading => {
            let sa = frame.alpha0.sqrt();
            (frame.g0 * frame.w0.abs() / sa, tau / sa)
        }
        GammaConvention::AlphaScaled => (frame.g0 * frame.w0.abs() / frame.alpha0, frame.h0),
    };
    h.powu(i as u32) * h.conj().powu(j as u32) * scale * parity_coefficient(i + j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub n: usize,
    pub entries: Vec<Complex64>,
    pub log_det: f64,
}

impl GammaMatrix {
    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }
}

pub fn gamma_matrix(frame: &MinimizerFrame, n: usize, conv: GammaConvention) -> GammaMatrix {
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(gamma_entry(frame, i, j, conv));
        }
    }
    let log_det = match Lu::new(n, entries.clone()) {
        Ok(lu) => lu.log_det().0,
        Err(_) => f64::NEG_INFINITY,
    };
    GammaMatrix { n, entries, log_det }
}

/// `log det C^(n) = -n^2 log(2 p0) + log det C0^(n)`.
pub fn log_det_c(n: usize, p0: f64) -> f64 {
    let pascal = bareiss_det(n, &pascal_matrix(n, 0)) as f64;
    pascal.ln() - (n * n) as f64 * (2.0 * p0).ln()
}

pub fn log_r_n(frame: &MinimizerFrame, n: usize, conv: GammaConvention) -> f64 {
    log_det_c(n, frame.p0()) + gamma_matrix(frame, n, conv).log_det
}

/// `R_n = det C^(n) det Gamma^(n)`.
pub fn r_n(frame: &MinimizerFrame, n: usize, conv: GammaConvention) -> f64 {
    log_r_n(frame, n, conv).exp()
}

/// The expanded product
/// `(g0|w0|/alpha0)^n |h0|^{n(n-1)} D1 D2 / ((2 p0)^{2n+2} prod (i!)^2)`
/// with `D1 = det[Gamma(i+j+1)]`, `D2 = det[c_{i+j}]`.
pub fn r_n_expanded(frame: &MinimizerFrame, n: usize) -> f64 {
    let p0 = frame.p0();
    let nf = n as f64;
    let mut log = nf * (frame.g0 * frame.w0.abs() / frame.alpha0).ln() + nf * (nf - 1.0) * frame.h0.norm().ln()
        - (2.0 * nf + 2.0) * (2.0 * p0).ln();
    let mut hankel_fact = Vec::with_capacity(n * n);
    let mut hankel_c = Vec::with_capacity(n * n);
    for i in 0..n {
        log -= 2.0 * libm::lgamma(i as f64 + 1.0);
        for j in 0..n {
            hankel_fact.push(Complex64::new(libm::tgamma((i + j + 1) as f64), 0.0));
            hankel_c.push(Complex64::new(parity_coefficient(i + j), 0.0));
        }
    }
    for m in [hankel_fact, hankel_c] {
        log += Lu::new(n, m).map(|lu| lu.log_det().0).unwrap_or(f64::NEG_INFINITY);
    }
    log.exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RnComparison {
    pub n: usize,
    pub direct: f64,
    pub alpha_scaled: f64,
    pub expanded: f64,
    /// `expanded / alpha_scaled`.
    pub ratio: f64,
}

pub fn compare_r_n(frame: &MinimizerFrame, n: usize, conv: GammaConvention) -> RnComparison {
    let alpha_scaled = r_n(frame, n, GammaConvention::AlphaScaled);
    let expanded = r_n_expanded(frame, n);
    RnComparison { n, direct: r_n(frame, n, conv), alpha_scaled, expanded, ratio: expanded / alpha_scaled }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainParams {
    pub y_ratio: f64,
    pub order: usize,
    pub p0: f64,
    /// `C(Y)`.
    pub speed: f64,
    pub convention: GammaConvention,
    /// `log R_n` for `n = 0..=N`, with `R_0 = 1`.
    pub log_r: Vec<f64>,
    /// Phase shifts `x_n^0 = log(R_n / R_{n-1}) / (2 p0)` for `n = 1..=N`.
    pub x0: Vec<f64>,
}

impl TrainParams {
    pub fn new(frame: &MinimizerFrame, order: usize, conv: GammaConvention) -> Self {
        let mut log_r = alloc::vec![0.0];
        for n in 1..=order {
            log_r.push(log_r_n(frame, n, conv));
        }
        Self::from_log_r(frame.y_ratio, frame.p0(), frame.c, conv, log_r)
    }

    pub fn from_log_r(y_ratio: f64, p0: f64, speed: f64, convention: GammaConvention, log_r: Vec<f64>) -> Self {
        let x0 = log_r.windows(2).map(|w| (w[1] - w[0]) / (2.0 * p0)).collect();
        TrainParams { y_ratio, order: log_r.len() - 1, p0, speed, convention, log_r, x0 }
    }

    /// Number of train terms, `floor((N+1)/2)`.
    pub fn train_terms(&self) -> usize {
        self.order.div_ceil(2)
    }

    /// The same parameters after `g -> c g`: `R_n -> c^n R_n`.
    pub fn scaled(&self, c: f64) -> Self {
        let lc = c.ln();
        let log_r = self.log_r.iter().enumerate().map(|(n, v)| v + n as f64 * lc).collect();
        Self::from_log_r(self.y_ratio, self.p0, self.speed, self.convention, log_r)
    }

    fn exponents(&self, xi: f64, t: f64) -> Vec<f64> {
        let lt = t.ln();
        self.log_r
            .iter()
            .enumerate()
            .map(|(n, lr)| {
                let nf = n as f64;
                lr + 2.0 * self.p0 * nf * xi - 0.5 * nf * (nf + 2.0) * lt
            })
            .collect()
    }

    /// Closed-form ridge position `xi_n`.
    pub fn ridge_xi(&self, n: usize, t: f64) -> f64 {
        ((n as f64 + 0.5) * t.ln() - 2.0 * self.p0 * self.x0[n - 1]) / (2.0 * self.p0)
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log Delta_N(xi, t)`.
pub fn log_delta(params: &TrainParams, xi: f64, t: f64) -> f64 {
    log_sum_exp(&params.exponents(xi, t))
}

/// `u_theta = 4 p0^2 sum_{n,l} (n-l)^2 R_n R_l e^{2(n+l) p0 xi} / (t^{..} Delta_N^2)`.
pub fn u_theta(params: &TrainParams, xi: f64, t: f64) -> f64 {
    let e = params.exponents(xi, t);
    let ld = log_sum_exp(&e);
    let mut s = 0.0;
    for n in 0..e.len() {
        for l in n + 1..e.len() {
            let d = (l - n) as f64;
            s += 2.0 * d * d * (e[n] + e[l] - 2.0 * ld).exp();
        }
    }
    4.0 * params.p0 * params.p0 * s
}

fn sech2(z: f64) -> f64 {
    let c = z.abs();
    if c > 350.0 {
        return 0.0;
    }
    let e = (-2.0 * c).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Sum of `floor((N+1)/2)` sech² terms,
/// `2 p0^2 sech^2(p0 (xi - log t^{n+1/2} / (2 p0) + x_n^0))`.
pub fn soliton_train(params: &TrainParams, xi: f64, t: f64) -> f64 {
    let p0 = params.p0;
    (1..=params.train_terms())
        .map(|n| 2.0 * p0 * p0 * sech2(p0 * (xi - params.ridge_xi(n, t))))
        .sum()
}

/// Train at absolute `(x, y, t)`; the frame is solved at `Y = y / t`.
pub fn soliton_train_at(
    domain: &SpectralDomain,
    order: usize,
    conv: GammaConvention,
    x: f64,
    y: f64,
    t: f64,
) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::BadArgument("t must exceed 1"));
    }
    let frame = frame_at(domain, y / t)?;
    let params = TrainParams::new(&frame, order, conv);
    Ok(soliton_train(&params, x - frame.c * t, t))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::BadEpsilon(eps));
    }
    Ok(())
}

/// `I_n = (log t^{n-eps}, log t^{n+1+eps}) / (2 p0)`; `I_1` is unbounded below.
pub fn intervals_in(p0: f64, t: f64, n: usize, eps: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    if !(t > 1.0) {
        return Err(Error::BadArgument("t must exceed 1"));
    }
    if n == 0 {
        return Err(Error::BadArgument("interval index starts at 1"));
    }
    let lt = t.ln() / (2.0 * p0);
    let nf = n as f64;
    let lo = if n == 1 { f64::NEG_INFINITY } else { (nf - eps) * lt };
    Ok((lo, (nf + 1.0 + eps) * lt))
}

/// Upper end of the union of `I_1 .. I_{floor((N+1)/2)}`.
pub fn theorem_bound(p0: f64, t: f64, order: usize, eps: f64) -> Result<f64> {
    Ok(intervals_in(p0, t, order.div_ceil(2), eps)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ridge {
    pub xi: f64,
    pub amplitude: f64,
}

/// Local maxima of `u_theta` on `(lo, hi)`, located on a grid of spacing
/// `0.05 / p0` and refined by golden section. Maxima below `1e-6 * 2 p0^2`
/// and maxima on the window edge are dropped.
pub fn find_ridges(params: &TrainParams, t: f64, lo: f64, hi: f64) -> Vec<Ridge> {
    let h = 0.05 / params.p0;
    let n = ((hi - lo) / h).ceil() as usize;
    let floor = 2e-6 * params.p0 * params.p0;
    let vals: Vec<f64> = (0..=n).map(|i| u_theta(params, lo + (hi - lo) * i as f64 / n as f64, t)).collect();
    let mut out = Vec::new();
    for i in 1..n {
        if vals[i] > vals[i - 1] && vals[i] >= vals[i + 1] && vals[i] > floor {
            let a = lo + (hi - lo) * (i - 1) as f64 / n as f64;
            let b = lo + (hi - lo) * (i + 1) as f64 / n as f64;
            let (xi, amplitude) = golden_section_max(|x| u_theta(params, x, t), a, b, 1e-10);
            out.push(Ridge { xi, amplitude });
        }
    }
    out
}

/// Ridges of `u_theta` in the domain `xi < theorem_bound`, scanned from
/// well below the first closed-form ridge.
pub fn ridges_in_theorem_domain(params: &TrainParams, t: f64, eps: f64) -> Result<Vec<Ridge>> {
    let hi = theorem_bound(params.p0, t, params.order, eps)?;
    let lo = params.ridge_xi(1, t).min(hi) - 20.0 / params.p0;
    Ok(find_ridges(params, t, lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RidgePoint {
    pub y: f64,
    /// `C(Y) t + log t^{n+1/2} / (2 p0) - x_n^0`.
    pub x_closed: f64,
    /// Maximizer of `u_theta` within `2 / p0` of `x_closed`.
    pub x_refined: f64,
    pub u_peak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeCurve {
    pub t: f64,
    pub n: usize,
    pub points: Vec<RidgePoint>,
    /// `y` values where no frame exists, with the reason.
    pub gaps: Vec<(f64, Error)>,
}

/// Ridge `n` of `u_theta` (built with `order >= n` terms) along `y_grid`.
pub fn ridge_curves(
    domain: &SpectralDomain,
    t: f64,
    n: usize,
    order: usize,
    conv: GammaConvention,
    y_grid: &[f64],
) -> Result<RidgeCurve> {
    if !(t > 1.0) {
        return Err(Error::BadArgument("t must exceed 1"));
    }
    if n == 0 || n > order {
        return Err(Error::BadArgument("ridge index must be in 1..=order"));
    }
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for &y in y_grid {
        match frame_at(domain, y / t) {
            Ok(frame) => points.push(ridge_point(&TrainParams::new(&frame, order, conv), y, t, n)),
            Err(e) => gaps.push((y, e)),
        }
    }
    Ok(RidgeCurve { t, n, points, gaps })
}

pub fn ridge_point(params: &TrainParams, y: f64, t: f64, n: usize) -> RidgePoint {
    let xi = params.ridge_xi(n, t);
    let w = 2.0 / params.p0;
    let (xr, u_peak) = golden_section_max(|x| u_theta(params, x, t), xi - w, xi + w, 1e-10);
    RidgePoint { y, x_closed: params.speed * t + xi, x_refined: params.speed * t + xr, u_peak }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::WeightSpec;
    use crate::phase::frame_at;
    use crate::reduction::{c_matrix, moments, subdomain_spec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn frame() -> MinimizerFrame {
        frame_at(&SpectralDomain::default_circle(), 0.5).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let f = frame();
        let g = gamma_matrix(&f, 2, GammaConvention::AlphaScaled);
        let a = f.g0 * f.w0.abs() / f.alpha0;
        assert_relative_eq!(g.entries[0].re, a * core::f64::consts::PI.sqrt(), max_relative = 1e-14);
        assert_eq!(g.entries[1], Complex64::new(0.0, 0.0));
        assert_relative_eq!(parity_coefficient(0) * parity_coefficient(2), core::f64::consts::PI / 2.0, max_relative = 1e-14);
        let ones: Vec<Complex64> = [1.0, 1.0, 1.0, 2.0].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        assert_relative_eq!(Lu::new(2, ones).unwrap().det().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn r1_closed_form() {
        let f = frame();
        let expect = f.g0 * f.w0.abs() / f.alpha0 * core::f64::consts::PI.sqrt() / (2.0 * f.p0());
        assert_relative_eq!(r_n(&f, 1, GammaConvention::AlphaScaled), expect, max_relative = 1e-13);
        for n in 1..=6 {
            for conv in [GammaConvention::Leading, GammaConvention::AlphaScaled] {
                assert!(r_n(&f, n, conv) > 0.0);
            }
        }
    }

    #[test]
    fn conventions_differ_by_alpha_power() {
        let f = frame();
        for n in 1..=5 {
            let ratio = log_r_n(&f, n, GammaConvention::Leading) - log_r_n(&f, n, GammaConvention::AlphaScaled);
            assert_relative_eq!(ratio, 0.5 * (n * n) as f64 * f.alpha0.ln(), max_relative = 1e-10);
        }
    }

    #[test]
    fn expanded_product_prefactor() {
        let f = frame();
        for n in 1..=5 {
            let c = compare_r_n(&f, n, GammaConvention::Leading);
            let power = (n * n) as f64 - 2.0 * n as f64 - 2.0;
            assert_relative_eq!(c.ratio.ln(), power * (2.0 * f.p0()).ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn leading_gamma_matches_moment_quadrature() {
        let d = SpectralDomain::default_circle();
        let f = frame();
        let spec = subdomain_spec(&d, &f, 2).unwrap();
        let t = 1e4;
        let mm = moments(&spec, 0.0, t, 64).unwrap();
        for (i, j) in [(0, 0), (1, 1), (2, 0), (0, 2), (2, 2)] {
            let lead = gamma_entry(&f, i, j, GammaConvention::Leading) / t.powf((i + j) as f64 / 2.0 + 1.5);
            assert!((mm.get(i, j) - lead).norm() < 0.01 * lead.norm(), "({i},{j})");
        }
        let _ = c_matrix(2, f.p0());
    }

    #[test]
    fn delta_examples() {
        let f = frame();
        let p = TrainParams::new(&f, 1, GammaConvention::Leading);
        let t: f64 = 1e3;
        let xi = (1.5 * t.ln() - p.log_r[1]) / (2.0 * f.p0());
        assert_relative_eq!(log_delta(&p, xi, t), 2f64.ln(), epsilon = 1e-14);
        assert!(log_delta(&p, 0.0, 1e12) < 1e-12);
        let empty = TrainParams::from_log_r(0.5, f.p0(), f.c, GammaConvention::Leading, alloc::vec![0.0]);
        assert_eq!(log_delta(&empty, 3.0, 10.0), 0.0);
        assert_eq!(u_theta(&empty, 3.0, 10.0), 0.0);
    }

    #[test]
    fn one_term_is_exact_sech2() {
        let f = frame();
        let p = TrainParams::new(&f, 1, GammaConvention::Leading);
        let t = 500.0;
        for i in -40..40 {
            let xi = p.ridge_xi(1, t) + 0.1 * i as f64;
            assert_relative_eq!(u_theta(&p, xi, t), soliton_train(&p, xi, t), epsilon = 1e-13);
        }
    }

    #[test]
    fn peak_height_tends_to_amplitude() {
        let f = frame();
        let p = TrainParams::new(&f, 2, GammaConvention::Leading);
        let amp = 2.0 * f.p0() * f.p0();
        let mut last = f64::INFINITY;
        for t in [1e2, 1e3, 1e4] {
            let (lo, _) = (p.ridge_xi(1, t) - 10.0, 0.0);
            let hi = p.ridge_xi(2, t) + 10.0;
            let top = find_ridges(&p, t, lo, hi).iter().map(|r| r.amplitude).fold(0.0, f64::max);
            let err = (top - amp).abs();
            assert!(err <= last);
            last = err;
        }
        assert!(last < 1e-3 * amp);
    }

    #[test]
    fn ridge_area() {
        let f = frame();
        let p = TrainParams::new(&f, 3, GammaConvention::Leading);
        let t = 1e4;
        for n in 1..=2 {
            let mid = |a: usize, b: usize| 0.5 * (p.ridge_xi(a, t) + p.ridge_xi(b, t));
            let lo = if n == 1 { p.ridge_xi(1, t) - 20.0 / f.p0() } else { mid(n - 1, n) };
            let hi = mid(n, n + 1);
            let (x, w) = crate::quad::gl_interval(400, lo, hi);
            let area: f64 = x.iter().zip(&w).map(|(x, w)| w * u_theta(&p, *x, t)).sum();
            assert!((area / (4.0 * f.p0()) - 1.0).abs() < 0.01, "ridge {n}: {area}");
        }
    }

    #[test]
    fn interval_examples() {
        let (lo, hi) = intervals_in(1.5, core::f64::consts::E.powi(2), 2, 0.1).unwrap();
        assert_relative_eq!(lo, 1.9 * 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(hi, 3.1 * 2.0 / 3.0, epsilon = 1e-14);
        let (lo, hi) = intervals_in(1.5, 100.0, 1, 0.1).unwrap();
        assert_eq!(lo, f64::NEG_INFINITY);
        assert_relative_eq!(hi, 2.1 * 100f64.ln() / 3.0);
        assert!(intervals_in(1.5, 1e3, 3, 0.1).unwrap().1 > intervals_in(1.5, 1e3, 4, 0.1).unwrap().0);
        for bad in [0.0, 0.25, 0.3, -0.1] {
            assert!(matches!(intervals_in(1.5, 10.0, 1, bad), Err(Error::BadEpsilon(_))));
        }
    }

    #[test]
    fn ridge_curve_refinement() {
        let d = SpectralDomain::default_circle();
        let t = 1e3;
        let ys: Vec<f64> = (0..9).map(|i| t * (0.3 + 0.05 * i as f64)).collect();
        let rc = ridge_curves(&d, t, 1, 2, GammaConvention::Leading, &ys).unwrap();
        assert!(rc.gaps.is_empty());
        for pt in &rc.points {
            let p0 = frame_at(&d, pt.y / t).unwrap().p0();
            assert!((pt.x_refined - pt.x_closed).abs() < 1e-3 / p0);
        }
        for w in rc.points.windows(3) {
            let h = w[1].y - w[0].y;
            let second = (w[2].x_closed - 2.0 * w[1].x_closed + w[0].x_closed) / (h * h);
            assert!(second.abs() < 1.0);
        }
    }

    #[test]
    fn ridge_slope_in_log_t() {
        let f = frame();
        let p = TrainParams::new(&f, 3, GammaConvention::Leading);
        for n in 1..=3 {
            let a = ridge_point(&p, 0.0, 1e3, n).x_refined - f.c * 1e3;
            let b = ridge_point(&p, 0.0, 1e4, n).x_refined - f.c * 1e4;
            let slope = (b - a) / (1e4f64.ln() - 1e3f64.ln());
            assert_relative_eq!(slope, (n as f64 + 0.5) / (2.0 * f.p0()), max_relative = 1e-3);
        }
    }

    #[test]
    fn weight_scaling_shifts_ridges() {
        let d = SpectralDomain::default_circle();
        let c = 7.5;
        let scaled = d.with_weight(WeightSpec::Constant { value: c });
        let a = TrainParams::new(&frame_at(&d, 0.5).unwrap(), 3, GammaConvention::Leading);
        let b = TrainParams::new(&frame_at(&scaled, 0.5).unwrap(), 3, GammaConvention::Leading);
        let shift = c.ln() / (2.0 * a.p0);
        for n in 1..=3 {
            assert_relative_eq!(b.x0[n - 1] - a.x0[n - 1], shift, epsilon = 1e-12);
            assert_relative_eq!(a.ridge_xi(n, 1e4) - b.ridge_xi(n, 1e4), shift, epsilon = 1e-11);
        }
        let s = a.scaled(c);
        for n in 0..=3 {
            assert_relative_eq!(s.log_r[n], b.log_r[n], epsilon = 1e-11);
        }
    }

    proptest! {
        #[test]
        fn u_theta_nonnegative(
            logs in proptest::collection::vec(-30.0f64..5.0, 1..6),
            xi in -20.0f64..40.0,
            t in 1.5f64..1e6,
            p0 in 0.3f64..3.0,
        ) {
            let mut log_r = alloc::vec![0.0];
            log_r.extend(logs);
            let p = TrainParams::from_log_r(0.0, p0, 0.0, GammaConvention::Leading, log_r);
            let u = u_theta(&p, xi, t);
            prop_assert!(u >= 0.0 && u.is_finite());
            prop_assert!(log_delta(&p, xi, t) >= 0.0);
        }

        #[test]
        fn scaling_preserves_shape(logc in -5.0f64..5.0, xi in -5.0f64..25.0) {
            let f = frame();
            let p = TrainParams::new(&f, 3, GammaConvention::Leading);
            let s = p.scaled(logc.exp());
            let shift = logc / (2.0 * f.p0());
            let (a, b) = (u_theta(&p, xi, 1e3), u_theta(&s, xi - shift, 1e3));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}
