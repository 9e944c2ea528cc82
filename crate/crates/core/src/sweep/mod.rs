//! Parameter sweeps over one scenario axis, the figure presets, and CSV
//! output.

mod presets;
mod report;

pub use presets::{figure_preset, Figure, Series, FIGURE_NAMES};
pub use report::{
    agree, columns, num, validate_report, write_csv, write_table, Row, ValidationReport,
};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analytic::{Analytic, OutageBreakdown};
use crate::channel::BigGCache;
use crate::error::{Error, Result};
use crate::montecarlo::{estimate, McReport, McSettings};
use crate::system::{derive, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    TotalPowerDbm,
    BackoffStepDb,
    KIFactor,
    GammaSumTh,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::TotalPowerDbm => "total_power_dbm",
            SweepAxis::BackoffStepDb => "backoff_step_db",
            SweepAxis::KIFactor => "k_i_factor",
            SweepAxis::GammaSumTh => "gamma_sum_th",
        }
    }

    /// Sets the swept value on a copy of `cfg`.
    pub fn apply(&self, cfg: &ConfigFile, v: f64) -> ConfigFile {
        let mut c = cfg.clone();
        match self {
            SweepAxis::TotalPowerDbm => c.scenario.total_power_dbm = v,
            SweepAxis::BackoffStepDb => c.scenario.backoff_step_db = v,
            SweepAxis::KIFactor => c.scenario.interference.k_i_factor = v,
            SweepAxis::GammaSumTh => c.thresholds.gamma_sum = v,
        }
        c
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "total_power_dbm" => SweepAxis::TotalPowerDbm,
            "backoff_step_db" => SweepAxis::BackoffStepDb,
            "k_i_factor" => SweepAxis::KIFactor,
            "gamma_sum_th" => SweepAxis::GammaSumTh,
            _ => {
                return Err(Error::invalid(
                    "axis",
                    format!(
                        "unknown axis `{s}` (total_power_dbm, backoff_step_db, k_i_factor, gamma_sum_th)"
                    ),
                ))
            }
        })
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    MonteCarlo,
    Both,
}

impl Mode {
    pub fn analytic(&self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }
    pub fn montecarlo(&self) -> bool {
        matches!(self, Mode::MonteCarlo | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "montecarlo" | "mc" => Ok(Mode::MonteCarlo),
            "both" => Ok(Mode::Both),
            _ => Err(Error::invalid(
                "mode",
                format!("unknown mode `{s}` (analytic, montecarlo, both)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub mode: Mode,
    pub mc_iterations: u64,
    pub seed: u64,
}

impl SweepSpec {
    pub const DEFAULT_ITERATIONS: u64 = 1_000_000;
    pub const DEFAULT_SEED: u64 = 1;

    pub fn new(axis: SweepAxis, start: f64, stop: f64, steps: usize, mode: Mode) -> Self {
        SweepSpec {
            axis,
            start,
            stop,
            steps,
            mode,
            mc_iterations: Self::DEFAULT_ITERATIONS,
            seed: Self::DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            issues.push(crate::error::Issue::new(
                "start",
                "start < stop is required",
            ));
        }
        if self.steps < 2 {
            issues.push(crate::error::Issue::new("steps", "must be >= 2"));
        }
        if self.mode.montecarlo() && self.mc_iterations == 0 {
            issues.push(crate::error::Issue::new("iterations", "must be >= 1"));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(issues))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + span * i as f64 / last
                }
            })
            .collect()
    }
}

/// Results of one sweep point. Either part may carry the error that
/// stopped it.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub series: String,
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub config: ConfigFile,
    pub analytic: Option<std::result::Result<OutageBreakdown, String>>,
    pub montecarlo: Option<std::result::Result<McReport, String>>,
}

impl PointResult {
    pub fn ok(&self) -> bool {
        !matches!(self.analytic, Some(Err(_))) && !matches!(self.montecarlo, Some(Err(_)))
    }
}

type Part<T> = Option<std::result::Result<T, String>>;

fn evaluate_point(
    cfg: &ConfigFile,
    mode: Mode,
    mc: &McSettings,
    cache: &BigGCache,
) -> (Part<OutageBreakdown>, Part<McReport>) {
    let derived = cfg.validate().and_then(|_| derive(&cfg.scenario));
    let analytic = mode.analytic().then(|| {
        derived.as_ref().map_err(|e| e.to_string()).and_then(|d| {
            Analytic::new(d, cache)
                .breakdown(&cfg.thresholds)
                .map_err(|e| e.to_string())
        })
    });
    let montecarlo = mode.montecarlo().then(|| {
        derived
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|d| estimate(d, &cfg.thresholds, mc).map_err(|e| e.to_string()))
    });
    (analytic, montecarlo)
}

/// Evaluates every point of `sweep` on `cfg`. Points run concurrently and
/// come back in sweep order.
pub fn run_sweep(
    series: &str,
    cfg: &ConfigFile,
    sweep: &SweepSpec,
    workers: Option<usize>,
    cache: &BigGCache,
) -> Result<Vec<PointResult>> {
    sweep.validate()?;
    cfg.validate()?;
    let mc = McSettings {
        iterations: sweep.mc_iterations,
        seed: sweep.seed,
        workers,
    };
    let points: Vec<(f64, ConfigFile)> = sweep
        .values()
        .into_iter()
        .map(|v| (v, sweep.axis.apply(cfg, v)))
        .collect();
    let run = || {
        points
            .par_iter()
            .map(|(v, c)| {
                let (analytic, montecarlo) = evaluate_point(c, sweep.mode, &mc, cache);
                PointResult {
                    series: series.to_string(),
                    axis: sweep.axis,
                    axis_value: *v,
                    config: c.clone(),
                    analytic,
                    montecarlo,
                }
            })
            .collect::<Vec<_>>()
    };
    match workers {
        None => Ok(run()),
        Some(w) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?
            .install(run)),
    }
}

/// Runs every series of a figure preset, with `mode` overriding the preset's.
pub fn run_figure(
    fig: &Figure,
    mode: Mode,
    iterations: Option<u64>,
    workers: Option<usize>,
    cache: &BigGCache,
) -> Result<Vec<PointResult>> {
    let mut out = Vec::new();
    for s in &fig.series {
        let mut sweep = s.sweep;
        sweep.mode = mode;
        if let Some(n) = iterations {
            sweep.mc_iterations = n;
        }
        out.extend(run_sweep(&s.label, &s.config, &sweep, workers, cache)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_both_ends_exactly() {
        let s = SweepSpec::new(SweepAxis::TotalPowerDbm, 0.0, 60.0, 61, Mode::Analytic);
        let v = s.values();
        assert_eq!(v.len(), 61);
        for (i, x) in v.iter().enumerate() {
            assert_eq!(*x, i as f64);
        }
        let s = SweepSpec::new(SweepAxis::KIFactor, 0.1, 0.7, 3, Mode::Analytic);
        assert_eq!(s.values().last(), Some(&0.7));
    }

    #[test]
    fn spec_validation() {
        let s = SweepSpec::new(SweepAxis::TotalPowerDbm, 10.0, 0.0, 5, Mode::Both);
        assert!(s.validate().is_err());
        let s = SweepSpec::new(SweepAxis::TotalPowerDbm, 0.0, 10.0, 1, Mode::Both);
        assert!(s.validate().is_err());
        assert!("total_power_dbm".parse::<SweepAxis>().is_ok());
        assert!("power".parse::<SweepAxis>().is_err());
        assert_eq!("both".parse::<Mode>().unwrap(), Mode::Both);
    }

    #[test]
    fn axis_application() {
        let fig = figure_preset("fig1").unwrap();
        let c = &fig.series[0].config;
        assert_eq!(
            SweepAxis::GammaSumTh.apply(c, 2.5).thresholds.gamma_sum,
            2.5
        );
        assert_eq!(
            SweepAxis::KIFactor
                .apply(c, 0.3)
                .scenario
                .interference
                .k_i_factor,
            0.3
        );
    }

    #[test]
    fn two_point_analytic_sweep() {
        let fig = figure_preset("fig1").unwrap();
        let s = SweepSpec::new(SweepAxis::TotalPowerDbm, 10.0, 20.0, 2, Mode::Analytic);
        let cache = BigGCache::new();
        let rows = run_sweep("x", &fig.series[1].config, &s, None, &cache).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(PointResult::ok));
        assert!(rows.iter().all(|r| r.montecarlo.is_none()));
    }
}
