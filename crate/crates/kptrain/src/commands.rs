//! The computations behind each subcommand. Each returns a serializable
//! report; `main` writes the files and picks the exit code.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use kptrain_core::asymptotics::{
    compare_r_n, ridge_curves, soliton_train, theorem_bound, u_theta, RidgePoint, RnComparison, TrainParams,
};
use kptrain_core::domain::{validate_domain, DomainReport, SpectralDomain};
use kptrain_core::fredholm::{
    adapted_rule, assemble, check_positivity, exact_at, min_hermitian_eigenvalue, resolvent_norm, AdaptedOptions,
};
use kptrain_core::phase::{frame_at, MinimizerFrame};
use kptrain_core::reduction::{
    c_matrix, d_n, degenerate_values, moments, psin_inner_logdet, psin_inner_rowrep, subdomain_spec, u_degenerate,
    DegenerateValue, MomentMatrix,
};
use kptrain_core::validation::FieldSource;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, XMode};
use crate::output::{write_csv, write_json};

/// Tolerances for `validate`.
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const RESOLVENT_TOL: f64 = 1e-8;

pub fn pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Least-squares slope of `log v` against `log t`. `None` with fewer than two
/// distinct times or any non-positive value.
pub fn fit_exponent(ts: &[f64], vs: &[f64]) -> Option<f64> {
    if ts.len() != vs.len() || ts.len() < 2 || vs.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

// ---------------------------------------------------------------- validate

#[derive(Debug, Clone, Serialize)]
pub struct FrameCheck {
    pub y_ratio: f64,
    pub frame: Option<MinimizerFrame>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointCertificate {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub xi: f64,
    pub nodes: usize,
    /// Minimum of `Re (A phi, phi) / (phi, phi)` over random probes.
    pub min_ratio: f64,
    /// Smallest eigenvalue of the Hermitian part of `A`.
    pub min_eigenvalue: f64,
    /// `||(I + A)^{-1}||`.
    pub resolvent: f64,
    pub passed: bool,
}

/// Positivity and resolvent bound for the operator on the adapted rule at
/// frame-relative `(xi, t)`.
pub fn certify_point(
    domain: &SpectralDomain,
    frame: &MinimizerFrame,
    xi: f64,
    t: f64,
    opts: AdaptedOptions,
    trials: usize,
    seed: u64,
) -> PointCertificate {
    let rule = adapted_rule(domain, frame, xi, t, opts);
    let op = assemble(&rule, frame.k0, xi, frame.y_ratio, t);
    let pos = check_positivity(&op, trials, seed);
    let min_eigenvalue = min_hermitian_eigenvalue(&op);
    let resolvent = resolvent_norm(&op);
    let passed = pos.min_ratio >= -POSITIVITY_TOL && resolvent <= 1.0 + RESOLVENT_TOL;
    PointCertificate {
        x: xi + frame.c * t,
        y: frame.y_ratio * t,
        t,
        xi,
        nodes: rule.len(),
        min_ratio: pos.min_ratio,
        min_eigenvalue,
        resolvent,
        passed,
    }
}

/// `count` points `(Y, xi, t)` with `Y` in `[0.2, 0.8]`, `xi` in `[-2, 4]`,
/// `t` in `[1, 10]`.
pub fn random_points(seed: u64, count: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.random_range(0.2..0.8), rng.random_range(-2.0..4.0), rng.random_range(1.0..10.0)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub passed: bool,
    pub failures: Vec<String>,
    pub domain: DomainReport,
    pub frames: Vec<FrameCheck>,
    pub points: Vec<PointCertificate>,
}

pub fn validate(cfg: &RunConfig) -> anyhow::Result<ValidateReport> {
    let domain = cfg.spectral_domain();
    let report = validate_domain(&domain);
    let mut failures: Vec<String> =
        report.failures().map(|c| format!("domain check `{}` failed: {}", c.name, c.detail)).collect();
    let mut frames = Vec::new();
    let mut points = Vec::new();
    if failures.is_empty() {
        for &y in &cfg.validate.y_ratios {
            match frame_at(&domain, y) {
                Ok(f) => frames.push(FrameCheck { y_ratio: y, frame: Some(f), error: None }),
                Err(e) => {
                    failures.push(format!("frame at Y = {y}: {e}"));
                    frames.push(FrameCheck { y_ratio: y, frame: None, error: Some(e.to_string()) });
                }
            }
        }
        let pts = random_points(cfg.seed, cfg.validate.points);
        let opts = cfg.adapted();
        let results: Vec<Result<PointCertificate, String>> = pool(cfg.workers)?.install(|| {
            pts.par_iter()
                .enumerate()
                .map(|(i, &(y, xi, t))| {
                    let frame = frame_at(&domain, y).map_err(|e| format!("frame at Y = {y}: {e}"))?;
                    Ok(certify_point(&domain, &frame, xi, t, opts, cfg.validate.trials, cfg.seed.wrapping_add(i as u64)))
                })
                .collect()
        });
        for r in results {
            match r {
                Ok(c) => {
                    if !c.passed {
                        failures.push(format!(
                            "operator at (x, y, t) = ({:.4}, {:.4}, {:.4}): min ratio {:e}, resolvent {}",
                            c.x, c.y, c.t, c.min_ratio, c.resolvent
                        ));
                    }
                    points.push(c);
                }
                Err(e) => failures.push(e),
            }
        }
    }
    Ok(ValidateReport { passed: failures.is_empty(), failures, domain: report, frames, points })
}

// ------------------------------------------------------------------- field

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub xi: f64,
    pub u: f64,
    /// `|Im u| / |u|`; zero for the closed-form tiers.
    pub im_rel: f64,
    /// Condition estimate of the solve; zero where there is none.
    pub condition: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub source: FieldSource,
    pub times: Vec<f64>,
    pub y_ratios: Vec<f64>,
    pub points: usize,
    pub max_abs_u: f64,
    pub max_im_rel: f64,
    pub max_condition: f64,
}

enum Prepared {
    Exact(MinimizerFrame),
    Degenerate(Box<kptrain_core::reduction::SubdomainSpec>),
    Theta(TrainParams),
    Train(TrainParams),
}

fn prepare(cfg: &RunConfig, domain: &SpectralDomain, source: FieldSource, y_ratio: f64) -> anyhow::Result<Prepared> {
    let frame = frame_at(domain, y_ratio).with_context(|| format!("frame at Y = {y_ratio}"))?;
    Ok(match source {
        FieldSource::Exact => Prepared::Exact(frame),
        FieldSource::Degenerate => Prepared::Degenerate(Box::new(subdomain_spec(domain, &frame, cfg.order)?)),
        FieldSource::Theta => Prepared::Theta(TrainParams::new(&frame, cfg.order, cfg.convention)),
        FieldSource::Train => Prepared::Train(TrainParams::new(&frame, cfg.order, cfg.convention)),
    })
}

fn speed(p: &Prepared) -> f64 {
    match p {
        Prepared::Exact(f) => f.c,
        Prepared::Degenerate(s) => s.frame.c,
        Prepared::Theta(tp) | Prepared::Train(tp) => tp.speed,
    }
}

fn field_point(cfg: &RunConfig, domain: &SpectralDomain, p: &Prepared, xi: f64, t: f64) -> anyhow::Result<(f64, f64, f64)> {
    Ok(match p {
        Prepared::Exact(frame) => {
            let v = exact_at(domain, frame, xi, t, cfg.adapted())?;
            (v.u, v.im_rel, v.condition)
        }
        Prepared::Degenerate(spec) => (u_degenerate(spec, xi, t, cfg.quadrature.moment_nodes)?.u, 0.0, 0.0),
        Prepared::Theta(tp) => (u_theta(tp, xi, t), 0.0, 0.0),
        Prepared::Train(tp) => (soliton_train(tp, xi, t), 0.0, 0.0),
    })
}

/// Field rows over the configured grid, for every configured time. Rows are
/// ordered by `t`, then `Y`, then `x`, whatever the worker count.
pub fn field(cfg: &RunConfig, source: FieldSource) -> anyhow::Result<(Vec<FieldRow>, FieldSummary)> {
    if matches!(source, FieldSource::Theta | FieldSource::Train) {
        cfg.check_asymptotic_times()?;
    }
    let domain = cfg.spectral_domain();
    let pool = pool(cfg.workers)?;
    let axis = cfg.grid.x_axis();
    let mut rows = Vec::new();
    for &t in &cfg.times {
        for &y_ratio in &cfg.grid.y_ratios {
            let prep = prepare(cfg, &domain, source, y_ratio)?;
            let c = speed(&prep);
            let block: anyhow::Result<Vec<FieldRow>> = pool.install(|| {
                axis.par_iter()
                    .map(|&a| {
                        let (x, xi) = match cfg.grid.x_mode {
                            XMode::Relative => (c * t + a, a),
                            XMode::Absolute => (a, a - c * t),
                        };
                        let (u, im_rel, condition) = field_point(cfg, &domain, &prep, xi, t)
                            .with_context(|| format!("at (x, y, t) = ({x}, {}, {t})", y_ratio * t))?;
                        Ok(FieldRow { x, y: y_ratio * t, t, xi, u, im_rel, condition })
                    })
                    .collect()
            });
            rows.extend(block?);
        }
    }
    let summary = FieldSummary {
        source,
        times: cfg.times.clone(),
        y_ratios: cfg.grid.y_ratios.clone(),
        points: rows.len(),
        max_abs_u: rows.iter().map(|r| r.u.abs()).fold(0.0, f64::max),
        max_im_rel: rows.iter().map(|r| r.im_rel).fold(0.0, f64::max),
        max_condition: rows.iter().map(|r| r.condition).fold(0.0, f64::max),
    };
    Ok((rows, summary))
}

pub fn source_name(source: FieldSource) -> &'static str {
    match source {
        FieldSource::Exact => "exact",
        FieldSource::Degenerate => "degenerate",
        FieldSource::Theta => "theta",
        FieldSource::Train => "train",
    }
}

pub fn write_field(cfg: &RunConfig, source: FieldSource, rows: &[FieldRow], summary: &FieldSummary) -> anyhow::Result<Vec<PathBuf>> {
    let name = source_name(source);
    let data: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.x, r.y, r.t, r.xi, r.u, r.im_rel, r.condition]).collect();
    Ok(vec![
        write_csv(&cfg.output.dir, &format!("field_{name}.csv"), &["x", "y", "t", "xi", "u", "im_rel", "condition"], &data)?,
        write_json(&cfg.output.dir, &format!("field_{name}.json"), summary)?,
    ])
}

// ----------------------------------------------------------------- compare

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub inner_exact: f64,
    pub inner_degenerate: f64,
    pub inner_diff: f64,
    /// `sup |u_theta - train|` over `xi` below the theorem bound.
    pub train_sup: f64,
    pub train_sup_scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub order: usize,
    pub xi: f64,
    pub y_ratio: f64,
    pub rows: Vec<CompareRow>,
    pub inner_exponent: Option<f64>,
    pub train_exponent: Option<f64>,
}

/// `sup |u_theta - train|` on a grid of spacing `0.01 / p0` from 20 / p0
/// below the first ridge to the theorem bound.
pub fn train_sup(params: &TrainParams, t: f64, eps: f64) -> anyhow::Result<f64> {
    let hi = theorem_bound(params.p0, t, params.order, eps)?;
    let lo = params.ridge_xi(1, t).min(hi) - 20.0 / params.p0;
    let n = ((hi - lo) * params.p0 / 0.01).ceil() as usize;
    Ok((0..=n)
        .map(|i| {
            let xi = lo + (hi - lo) * i as f64 / n as f64;
            (u_theta(params, xi, t) - soliton_train(params, xi, t)).abs()
        })
        .fold(0.0, f64::max))
}

pub fn compare(cfg: &RunConfig) -> anyhow::Result<CompareReport> {
    cfg.check_asymptotic_times()?;
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.len() < 2 {
        bail!("refusing to fit a decay rate from a single time; give at least two values of t");
    }
    let domain = cfg.spectral_domain();
    let (xi, y_ratio) = (cfg.compare.xi, cfg.compare.y_ratio);
    let frame = frame_at(&domain, y_ratio)?;
    let spec = subdomain_spec(&domain, &frame, cfg.order)?;
    let params = TrainParams::new(&frame, cfg.order, cfg.convention);
    let rows: anyhow::Result<Vec<CompareRow>> = pool(cfg.workers)?.install(|| {
        times
            .par_iter()
            .map(|&t| {
                let ex = exact_at(&domain, &frame, xi, t, cfg.adapted())?;
                let dg = u_degenerate(&spec, xi, t, cfg.quadrature.moment_nodes)?;
                let sup = train_sup(&params, t, cfg.eps)?;
                Ok(CompareRow {
                    t,
                    inner_exact: ex.inner,
                    inner_degenerate: dg.inner,
                    inner_diff: (ex.inner - dg.inner).abs(),
                    train_sup: sup,
                    train_sup_scaled: sup * t.powf(0.25),
                })
            })
            .collect()
    });
    let rows = rows?;
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let diffs: Vec<f64> = rows.iter().map(|r| r.inner_diff).collect();
    let sups: Vec<f64> = rows.iter().map(|r| r.train_sup).collect();
    Ok(CompareReport {
        order: cfg.order,
        xi,
        y_ratio,
        inner_exponent: fit_exponent(&ts, &diffs),
        train_exponent: fit_exponent(&ts, &sups),
        rows,
    })
}

pub fn write_compare(cfg: &RunConfig, report: &CompareReport) -> anyhow::Result<Vec<PathBuf>> {
    let data: Vec<Vec<f64>> = report
        .rows
        .iter()
        .map(|r| vec![r.t, r.inner_exact, r.inner_degenerate, r.inner_diff, r.train_sup, r.train_sup_scaled])
        .collect();
    Ok(vec![
        write_csv(
            &cfg.output.dir,
            "compare.csv",
            &["t", "inner_exact", "inner_degenerate", "inner_diff", "train_sup", "train_sup_scaled"],
            &data,
        )?,
        write_json(&cfg.output.dir, "compare.json", report)?,
    ])
}

// ------------------------------------------------------------------ ridges

#[derive(Debug, Clone, Serialize)]
pub struct RidgeCurveOut {
    pub t: f64,
    pub n: usize,
    pub points: Vec<RidgePoint>,
    pub gaps: Vec<(f64, String)>,
}

/// Ridge curves `n = 1..=floor((N+1)/2)` for every time over the configured
/// `Y` values.
pub fn ridges(cfg: &RunConfig) -> anyhow::Result<Vec<RidgeCurveOut>> {
    cfg.check_asymptotic_times()?;
    let domain = cfg.spectral_domain();
    let terms = cfg.order.div_ceil(2);
    let mut out = Vec::new();
    for &t in &cfg.times {
        let ys: Vec<f64> = cfg.ridges.y_ratios.iter().map(|r| r * t).collect();
        for n in 1..=terms {
            let c = ridge_curves(&domain, t, n, cfg.order, cfg.convention, &ys)?;
            out.push(RidgeCurveOut {
                t,
                n,
                points: c.points,
                gaps: c.gaps.into_iter().map(|(y, e)| (y, e.to_string())).collect(),
            });
        }
    }
    Ok(out)
}

pub fn write_ridges(cfg: &RunConfig, curves: &[RidgeCurveOut]) -> anyhow::Result<Vec<PathBuf>> {
    let mut data = Vec::new();
    for c in curves {
        for p in &c.points {
            data.push(vec![c.t, c.n as f64, p.y, p.x_closed, p.x_refined, p.u_peak]);
        }
    }
    Ok(vec![
        write_csv(&cfg.output.dir, "ridges.csv", &["t", "n", "y", "x_closed", "x_refined", "u_peak"], &data)?,
        write_json(&cfg.output.dir, "ridges.json", &curves)?,
    ])
}

// ------------------------------------------------------------------- frame

#[derive(Debug, Clone, Serialize)]
pub struct SubdomainSummary {
    pub eps0: f64,
    pub eps0_bound: f64,
    pub delta0: f64,
    pub radius: f64,
    pub p_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentDump {
    pub t: f64,
    pub moments: MomentMatrix,
    pub d_n: [f64; 2],
    pub inner_logdet: f64,
    pub inner_rowrep: f64,
    pub values: DegenerateValue,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameDump {
    pub y_ratio: f64,
    pub frame: MinimizerFrame,
    pub train: TrainParams,
    pub r_n: Vec<RnComparison>,
    pub subdomain: SubdomainSummary,
    pub moments: Vec<MomentDump>,
}

/// Frame, train parameters and `R_n` table for every configured `Y`. With
/// `with_moments`, also the moment matrix, `D_N` and both forms of
/// `(psi_N, e)` at `xi = compare.xi` for every time.
pub fn frame(cfg: &RunConfig, with_moments: bool) -> anyhow::Result<Vec<FrameDump>> {
    let domain = cfg.spectral_domain();
    let mut out = Vec::new();
    for &y_ratio in &cfg.grid.y_ratios {
        let frame = frame_at(&domain, y_ratio).with_context(|| format!("frame at Y = {y_ratio}"))?;
        let spec = subdomain_spec(&domain, &frame, cfg.order)?;
        let mut dumps = Vec::new();
        if with_moments {
            let c = c_matrix(cfg.order, frame.p0());
            for &t in &cfg.times {
                let mm = moments(&spec, cfg.compare.xi, t, cfg.quadrature.moment_nodes)?;
                let dn = d_n(&c, &mm)?;
                let row = mm.first_row();
                dumps.push(MomentDump {
                    t,
                    d_n: [dn.re, dn.im],
                    inner_logdet: psin_inner_logdet(&c, &mm)?,
                    inner_rowrep: psin_inner_rowrep(&c, &mm, &row)?,
                    values: degenerate_values(&c, &mm)?,
                    moments: mm,
                });
            }
        }
        out.push(FrameDump {
            y_ratio,
            train: TrainParams::new(&frame, cfg.order, cfg.convention),
            r_n: (1..=cfg.order).map(|n| compare_r_n(&frame, n, cfg.convention)).collect(),
            subdomain: SubdomainSummary {
                eps0: spec.eps0,
                eps0_bound: spec.eps0_bound,
                delta0: spec.delta0,
                radius: spec.radius,
                p_spread: spec.p_spread,
            },
            frame,
            moments: dumps,
        });
    }
    if out.is_empty() {
        return Err(anyhow!("no Y values configured"));
    }
    Ok(out)
}
