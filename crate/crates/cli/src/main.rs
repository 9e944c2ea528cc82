use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nomafso::channel::BigGCache;
use nomafso::montecarlo::{estimate_big_g, McSettings};
use nomafso::specfun::QuadratureSpec;
use nomafso::sweep::{
    agree, figure_preset, num, run_figure, run_sweep, validate_report, write_csv, write_table,
    Mode, PointResult, SweepAxis, SweepSpec, FIGURE_NAMES,
};
use nomafso::system::{derive, ConfigFile};

#[derive(Parser)]
#[command(
    name = "nomafso",
    version,
    about = "Outage analysis for NOMA uplinks over an FSO relay backhaul"
)]
struct Cli {
    /// Worker threads for sweeps and Monte-Carlo runs (default: all cores).
    #[arg(long, global = true, env = "NOMAFSO_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config file and print the derived link constants.
    Validate { config: PathBuf },
    /// Sweep one parameter of a config and write a CSV.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, allow_hyphen_values = true)]
        start: f64,
        #[arg(long, allow_hyphen_values = true)]
        stop: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "both")]
        mode: Mode,
        #[arg(long, default_value_t = SweepSpec::DEFAULT_ITERATIONS)]
        iterations: u64,
        #[arg(long, default_value_t = SweepSpec::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a built-in figure preset (fig1..fig4) and write a CSV.
    Figure {
        name: String,
        #[arg(long, default_value = "both")]
        mode: Mode,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the FSO coverage function G(A) over log-spaced A.
    Bigg {
        config: PathBuf,
        #[arg(long)]
        a_min: f64,
        #[arg(long)]
        a_max: f64,
        #[arg(long)]
        points: usize,
        /// Also estimate each point by simulation with this many draws.
        #[arg(long)]
        mc_iterations: Option<u64>,
        #[arg(long, default_value_t = SweepSpec::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the configs of a figure preset as JSON files, one per series.
    Export {
        name: String,
        #[arg(long)]
        dir: PathBuf,
    },
}

fn load(path: &Path) -> Result<ConfigFile> {
    ConfigFile::load(path).with_context(|| format!("reading {}", path.display()))
}

fn report_rows(points: &[PointResult]) -> ExitCode {
    let failed: Vec<&PointResult> = points.iter().filter(|p| !p.ok()).collect();
    if failed.is_empty() {
        eprintln!("{} rows written", points.len());
        ExitCode::SUCCESS
    } else {
        for p in &failed {
            let err = p.row().pop().unwrap_or_default();
            eprintln!("{} {}={}: {err}", p.series, p.axis, num(p.axis_value));
        }
        eprintln!("{} of {} rows failed", failed.len(), points.len());
        ExitCode::from(2)
    }
}

fn bigg_table(
    cfg: &ConfigFile,
    a_min: f64,
    a_max: f64,
    points: usize,
    mc: Option<McSettings>,
) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    if !(a_min > 0.0 && a_min < a_max && a_max.is_finite()) {
        bail!("a-min: 0 < a-min < a-max is required");
    }
    if points < 2 {
        bail!("points: must be >= 2");
    }
    cfg.scenario.validate()?;
    let d = derive(&cfg.scenario)?;
    let spec = QuadratureSpec::precise();
    let cache = BigGCache::new();
    let (l0, l1) = (a_min.ln(), a_max.ln());
    let mut header: Vec<String> = ["a", "big_g", "big_g_complement"].map(String::from).into();
    if mc.is_some() {
        header.extend(["mc_big_g", "mc_big_g_se", "mc_n", "agree"].map(String::from));
    }
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let a = if i + 1 == points {
            a_max
        } else {
            (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp()
        };
        let g = cache.get(a, &d.fso, &spec)?;
        let mut r = vec![num(a), num(g.value), num(g.complement)];
        if let Some(s) = &mc {
            let e = estimate_big_g(a, &d.fso, s)?;
            let ok = agree(g.value, &e);
            r.extend([
                num(e.value),
                num(e.std_err),
                e.n.to_string(),
                ok.to_string(),
            ]);
        }
        rows.push(r);
    }
    Ok((header, rows))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cache = BigGCache::new();
    let workers = cli.workers;
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let r = validate_report(&cfg);
            print!("{r}");
            Ok(if r.is_valid() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Sweep {
            config,
            axis,
            start,
            stop,
            steps,
            mode,
            iterations,
            seed,
            out,
        } => {
            let cfg = load(&config)?;
            let spec = SweepSpec {
                mc_iterations: iterations,
                seed,
                ..SweepSpec::new(axis, start, stop, steps, mode)
            };
            let label = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let points = run_sweep(&label, &cfg, &spec, workers, &cache)?;
            write_csv(&out, axis.name(), &points)
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(report_rows(&points))
        }
        Command::Figure {
            name,
            mode,
            iterations,
            out,
        } => {
            let fig = figure_preset(&name)?;
            let axis = fig.series[0].sweep.axis;
            let points = run_figure(&fig, mode, iterations, workers, &cache)?;
            write_csv(&out, axis.name(), &points)
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(report_rows(&points))
        }
        Command::Bigg {
            config,
            a_min,
            a_max,
            points,
            mc_iterations,
            seed,
            out,
        } => {
            let cfg = load(&config)?;
            let mc = mc_iterations.map(|n| McSettings {
                workers,
                ..McSettings::new(n, seed)
            });
            let (header, rows) = bigg_table(&cfg, a_min, a_max, points, mc)?;
            write_table(&out, &header, rows)
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { name, dir } => {
            let fig = figure_preset(&name)?;
            std::fs::create_dir_all(&dir)?;
            for (i, s) in fig.series.iter().enumerate() {
                let path = dir.join(format!("{}_{}.json", fig.name, i + 1));
                std::fs::write(&path, s.config.to_json() + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("{}\t{}", path.display(), s.label);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(n) = e.downcast_ref::<nomafso::error::Error>() {
                if matches!(n, nomafso::error::Error::UnknownPreset(_)) {
                    eprintln!("known presets: {}", FIGURE_NAMES.join(", "));
                }
            }
            ExitCode::FAILURE
        }
    }
}
