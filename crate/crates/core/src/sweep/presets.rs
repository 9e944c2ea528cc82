use super::{Mode, SweepAxis, SweepSpec};
use crate::error::{Error, Result};
use crate::system::{ConfigFile, ScenarioConfig, ThresholdSet};

pub const FIGURE_NAMES: [&str; 4] = ["fig1", "fig2", "fig3", "fig4"];

/// One curve family: a full config and the sweep run over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub config: ConfigFile,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub name: &'static str,
    pub series: Vec<Series>,
}

fn base(l1: f64, l2: f64, s: f64, g1: f64, g2: f64) -> ConfigFile {
    ConfigFile {
        scenario: ScenarioConfig::new(0.0, s, l1, l2),
        thresholds: ThresholdSet {
            gamma1: g1,
            gamma2: g2,
            gamma_sum: 1.0,
        },
    }
}

fn power_sweep() -> SweepSpec {
    SweepSpec::new(SweepAxis::TotalPowerDbm, 0.0, 60.0, 61, Mode::Both)
}

/// The four built-in scenario families. Everything not set here comes from
/// the [`ScenarioConfig`] defaults.
///
/// fig2 threshold pairs and the fig4 (gamma_sum, xi, G) combinations are
/// representative choices spanning both formula branches.
pub fn figure_preset(name: &str) -> Result<Figure> {
    let series = match name {
        "fig1" => [0.0, 10.0, 25.0]
            .iter()
            .map(|&s| Series {
                label: format!("s={s}"),
                config: base(2e-7, 1e-7, s, 0.8, 0.4),
                sweep: power_sweep(),
            })
            .collect(),
        "fig2" => [(0.7, 0.4), (1.5, 1.0), (3.0, 2.0)]
            .iter()
            .map(|&(g1, g2)| Series {
                label: format!("gamma1={g1},gamma2={g2}"),
                config: base(2e-7, 1e-7, 5.0, g1, g2),
                sweep: power_sweep(),
            })
            .collect(),
        "fig3" => [0.1, 1.0, 10.0]
            .iter()
            .map(|&k| {
                let mut c = base(1e-6, 2e-7, 5.0, 0.7, 0.4);
                c.scenario.interference.k_i_factor = k;
                Series {
                    label: format!("k_i={k}"),
                    config: c,
                    sweep: power_sweep(),
                }
            })
            .collect(),
        "fig4" => [
            (1.0, 2.0, 100.0),
            (3.0, 2.0, 100.0),
            (1.0, 6.0, 100.0),
            (1.0, 2.0, 50.0),
        ]
        .iter()
        .map(|&(gs, xi, g)| {
            let mut c = base(1e-6, 2e-7, 0.0, 0.7, 0.4);
            c.scenario.total_power_dbm = 20.0;
            c.scenario.fso.xi = xi;
            c.scenario.relay_gain = g;
            c.thresholds.gamma_sum = gs;
            Series {
                label: format!("gamma_sum={gs},xi={xi},G={g}"),
                config: c,
                sweep: SweepSpec::new(SweepAxis::BackoffStepDb, 0.0, 30.0, 31, Mode::Both),
            }
        })
        .collect(),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(Figure {
        name: FIGURE_NAMES
            .iter()
            .find(|n| **n == name)
            .copied()
            .unwrap_or("fig"),
        series,
    })
}
