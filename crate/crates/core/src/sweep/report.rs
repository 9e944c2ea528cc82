use std::fmt;
use std::io::Write;
use std::path::Path;

use super::PointResult;
use crate::analytic::OutageBreakdown;
use crate::error::{Error, Issue, Result};
use crate::montecarlo::{McReport, OutageEstimate};
use crate::system::{derive, ConfigFile, DerivedParams};

/// Shortest text that parses back to the same f64.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

const SCENARIO: [&str; 12] = [
    "series",
    "total_power_dbm",
    "backoff_step_db",
    "k_i_factor",
    "gamma1",
    "gamma2",
    "gamma_sum",
    "xi",
    "relay_gain",
    "l1",
    "l2",
    "p_pi1",
];

const ANALYTIC: [&str; 9] = [
    "p_out_u1",
    "p_joint_below_u1_pi1",
    "p_joint_below_u2_pi2",
    "p_joint_above_u1_pi2",
    "p_out_u2",
    "p_joint_above_u2_pi1",
    "p_out_sum",
    "oma_u1",
    "oma_u2",
];

const MC: [&str; 11] = [
    "mc_p_out_u1",
    "mc_p_out_u2",
    "mc_p_out_u1_event",
    "mc_p_out_u2_event",
    "mc_p_joint_below_u1_pi1",
    "mc_p_joint_below_u2_pi2",
    "mc_p_joint_above_u1_pi2",
    "mc_p_joint_above_u2_pi1",
    "mc_p_out_sum",
    "mc_oma_u1",
    "mc_oma_u2",
];

const FLAGS: [&str; 5] = [
    "agree_u1",
    "agree_u2",
    "agree_sum",
    "agree_oma_u1",
    "agree_oma_u2",
];

/// Header in output order: the swept axis, scenario columns, analytic
/// values, Monte-Carlo value/standard-error pairs, agreement flags, error.
pub fn columns(axis: &str) -> Vec<String> {
    let mut c = vec![format!("axis_{axis}")];
    c.extend(SCENARIO.iter().map(|s| s.to_string()));
    c.extend(ANALYTIC.iter().map(|s| s.to_string()));
    for m in MC {
        c.push(m.to_string());
        c.push(format!("{m}_se"));
    }
    c.push("mc_n".into());
    c.push("mc_seed".into());
    c.extend(FLAGS.iter().map(|s| s.to_string()));
    c.push("error".into());
    c
}

pub type Row = Vec<String>;

/// `|a - mc| <= 3 SE`, with the SE floored at one count (1/n) so that a
/// run seeing no events, or only events, still has a finite resolution.
pub fn agree(a: f64, e: &OutageEstimate) -> bool {
    (a - e.value).abs() <= 3.0 * e.resolved_std_err()
}

impl PointResult {
    pub fn row(&self) -> Row {
        let c = &self.config;
        let sc = &c.scenario;
        let p_pi1 = crate::system::decoding_order_probs(sc.backoff_step_db).0;
        let mut r = vec![
            num(self.axis_value),
            self.series.clone(),
            num(sc.total_power_dbm),
            num(sc.backoff_step_db),
            num(sc.interference.k_i_factor),
            num(c.thresholds.gamma1),
            num(c.thresholds.gamma2),
            num(c.thresholds.gamma_sum),
            num(sc.fso.xi),
            num(sc.relay_gain),
            num(sc.l1),
            num(sc.l2),
            num(p_pi1),
        ];
        let mut errors = Vec::new();
        let a: Option<&OutageBreakdown> = match &self.analytic {
            Some(Ok(b)) => Some(b),
            Some(Err(e)) => {
                errors.push(format!("analytic: {e}"));
                None
            }
            None => None,
        };
        let m: Option<&McReport> = match &self.montecarlo {
            Some(Ok(m)) => Some(m),
            Some(Err(e)) => {
                errors.push(format!("montecarlo: {e}"));
                None
            }
            None => None,
        };
        match a {
            Some(b) => r.extend(
                [
                    b.p_out_u1,
                    b.p_joint_below_u1_pi1,
                    b.p_joint_below_u2_pi2,
                    b.p_joint_above_u1_pi2,
                    b.p_out_u2,
                    b.p_joint_above_u2_pi1,
                    b.p_out_sum,
                    b.oma_u1,
                    b.oma_u2,
                ]
                .map(num),
            ),
            None => r.extend(std::iter::repeat_n(String::new(), ANALYTIC.len())),
        }
        match m {
            Some(m) => {
                for e in [
                    m.out_u1,
                    m.out_u2,
                    m.out_u1_event,
                    m.out_u2_event,
                    m.joint_below_u1_pi1,
                    m.joint_below_u2_pi2,
                    m.joint_above_u1_pi2,
                    m.joint_above_u2_pi1,
                    m.out_sum,
                    m.oma_u1,
                    m.oma_u2,
                ] {
                    r.push(num(e.value));
                    r.push(num(e.std_err));
                }
                r.push(m.out_u1.n.to_string());
                r.push(m.out_u1.seed.to_string());
            }
            None => r.extend(std::iter::repeat_n(String::new(), 2 * MC.len() + 2)),
        }
        match (a, m) {
            (Some(b), Some(m)) => r.extend(
                [
                    agree(b.p_out_u1, &m.out_u1),
                    agree(b.p_out_u2, &m.out_u2),
                    agree(b.p_out_sum, &m.out_sum),
                    agree(b.oma_u1, &m.oma_u1),
                    agree(b.oma_u2, &m.oma_u2),
                ]
                .map(|f| f.to_string()),
            ),
            _ => r.extend(std::iter::repeat_n(String::new(), FLAGS.len())),
        }
        r.push(errors.join("; "));
        r
    }
}

/// Writes the points to `path` as CSV; see [`write_table`].
pub fn write_csv(path: &Path, axis: &str, points: &[PointResult]) -> Result<()> {
    write_table(path, &columns(axis), points.iter().map(PointResult::row))
}

/// Writes a table atomically: a temporary file in the same directory is
/// filled, flushed and renamed over the target, so a failed write leaves
/// nothing behind.
pub fn write_table<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Row>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = csv::Writer::from_writer(tmp.as_file());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    tmp.as_file().flush()?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// What `validate` prints: derived constants or every rule violation.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub derived: Option<DerivedParams>,
    pub issues: Vec<Issue>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate_report(cfg: &ConfigFile) -> ValidationReport {
    let mut notes = Vec::new();
    if cfg.scenario.uses_default_u_vector() {
        notes.push("interference.u_vector not given; using the default 10-element vector".into());
    }
    match cfg.validate().and_then(|_| derive(&cfg.scenario)) {
        Ok(d) => ValidationReport {
            derived: Some(d),
            issues: Vec::new(),
            notes,
        },
        Err(Error::Invalid(issues)) => ValidationReport {
            derived: None,
            issues,
            notes,
        },
        Err(e) => ValidationReport {
            derived: None,
            issues: vec![Issue::new("scenario", e.to_string())],
            notes,
        },
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        for i in &self.issues {
            writeln!(f, "error: {i}")?;
        }
        if let Some(d) = &self.derived {
            writeln!(f, "a1        = {}", num(d.a1))?;
            writeln!(f, "a2        = {}", num(d.a2))?;
            writeln!(f, "g_l       = {}", num(d.g_l))?;
            writeln!(f, "A0        = {}", num(d.a0))?;
            writeln!(f, "C_D       = {}", num(d.c_d))?;
            writeln!(f, "P(pi1)    = {}", num(d.p_pi1))?;
            writeln!(f, "P(pi2)    = {}", num(d.p_pi2))?;
            writeln!(f, "P (W)     = {}", num(d.total_power_w))?;
            let powers: Vec<String> = d.interferer_powers.iter().map(|p| num(*p)).collect();
            writeln!(f, "L'p' (W)  = [{}]", powers.join(", "))?;
            writeln!(f, "valid")?;
        }
        Ok(())
    }
}
