use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use kptrain::commands::{self, source_name};
use kptrain::output::write_json;
use kptrain::RunConfig;
use kptrain_core::validation::FieldSource;

#[derive(Parser, Debug)]
#[command(name = "kptrain", version, about = "Soliton trains of the KP-I equation from a spectral domain")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Times, comma separated.
    #[arg(long = "t", global = true, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Truncation order N.
    #[arg(long = "N", global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the domain, the phase minimizers and operator positivity.
    Validate,
    /// Evaluate a field tier on the configured grid.
    Field {
        #[arg(long, value_enum, default_value = "exact")]
        source: Source,
    },
    /// Exact against degenerate, and theta against the sech² train.
    Compare,
    /// Ridge curves of the theta field.
    Ridges,
    /// Minimizer frame, train parameters and R_n table.
    Frame {
        /// Also dump moments, D_N and both inner-product forms.
        #[arg(long)]
        moments: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Source {
    Exact,
    Degenerate,
    Theta,
    Train,
}

impl From<Source> for FieldSource {
    fn from(s: Source) -> Self {
        match s {
            Source::Exact => FieldSource::Exact,
            Source::Degenerate => FieldSource::Degenerate,
            Source::Theta => FieldSource::Theta,
            Source::Train => FieldSource::Train,
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = &cli.times {
        cfg.times = t.clone();
    }
    if let Some(n) = cli.order {
        cfg.order = n;
    }
    if let Some(e) = cli.eps {
        cfg.eps = e;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    cfg.check()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = load(cli)?;
    let start = Instant::now();
    let files = match &cli.command {
        Command::Validate => {
            let report = commands::validate(&cfg)?;
            let path = write_json(&cfg.output.dir, "validate.json", &report)?;
            for c in &report.domain.checks {
                println!("domain {:<24} {}", c.name, if c.passed { "ok" } else { "FAILED" });
            }
            for p in &report.points {
                println!(
                    "operator t = {:.3} xi = {:+.3}: min ratio {:+.3e}, resolvent {:.12}",
                    p.t, p.xi, p.min_ratio, p.resolvent
                );
            }
            if !report.passed {
                eprintln!("validation failed:");
                for f in &report.failures {
                    eprintln!("  {f}");
                }
                println!("wrote {}", path.display());
                return Ok(false);
            }
            vec![path]
        }
        Command::Field { source } => {
            let source = FieldSource::from(*source);
            let (rows, summary) = commands::field(&cfg, source)?;
            println!(
                "{} field: {} points, max |u| = {:.6e}, max Im/Re = {:.2e}",
                source_name(source),
                summary.points,
                summary.max_abs_u,
                summary.max_im_rel
            );
            commands::write_field(&cfg, source, &rows, &summary)?
        }
        Command::Compare => {
            let report = commands::compare(&cfg)?;
            for r in &report.rows {
                println!(
                    "t = {:>10.1}: |inner diff| = {:.3e}, sup|theta - train| t^1/4 = {:.4e}",
                    r.t, r.inner_diff, r.train_sup_scaled
                );
            }
            println!("fitted exponents: inner {:?}, train {:?}", report.inner_exponent, report.train_exponent);
            commands::write_compare(&cfg, &report)?
        }
        Command::Ridges => {
            let curves = commands::ridges(&cfg)?;
            for c in &curves {
                println!("t = {} ridge {}: {} points, {} gaps", c.t, c.n, c.points.len(), c.gaps.len());
            }
            commands::write_ridges(&cfg, &curves)?
        }
        Command::Frame { moments } => {
            let dumps = commands::frame(&cfg, *moments)?;
            for d in &dumps {
                println!(
                    "Y = {}: k0 = ({:.12}, {:.12}), C = {:.10}, alpha0 = {:.6}",
                    d.y_ratio, d.frame.k0[0], d.frame.k0[1], d.frame.c, d.frame.alpha0
                );
            }
            vec![write_json(&cfg.output.dir, "frame.json", &dumps)?]
        }
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    eprintln!("elapsed {:.2} s", start.elapsed().as_secs_f64());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
