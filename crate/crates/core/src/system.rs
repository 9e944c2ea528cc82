//! Scenario configuration, validation, and the deterministic constants
//! derived from it (power split, decoding-order probabilities, FSO link
//! budget, interferer powers).
//!
//! Powers are given in dBm in the config and converted to watts once, in
//! [`derive`]. Everything downstream works in linear units.

use serde::{Deserialize, Serialize};

use crate::channel::{fso_path_loss, geometric_loss_a0, FsoChannelParams};
use crate::error::{Error, Issue, Result};

/// Default normalized interferer powers (K = 10).
pub const U10: [f64; 10] = [
    0.6957, 0.6279, 0.4504, 0.4736, 0.9497, 0.0835, 0.2798, 0.4470, 0.5876, 0.8776,
];

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsoConfig {
    /// Receiver aperture radius, m.
    #[serde(default = "FsoConfig::default_r")]
    pub r: f64,
    /// Beam divergence, rad.
    #[serde(default = "FsoConfig::default_phi")]
    pub phi: f64,
    /// Relay-to-destination distance, m.
    #[serde(default = "FsoConfig::default_d_rd")]
    pub d_rd: f64,
    /// Weather attenuation, 1/m.
    #[serde(default = "FsoConfig::default_kappa")]
    pub kappa: f64,
    /// Photodetector responsivity.
    #[serde(default = "FsoConfig::default_rho")]
    pub rho: f64,
    #[serde(default = "FsoConfig::default_alpha")]
    pub alpha: f64,
    #[serde(default = "FsoConfig::default_beta")]
    pub beta: f64,
    /// Beam radius over jitter standard deviation.
    #[serde(default = "FsoConfig::default_xi")]
    pub xi: f64,
}

impl FsoConfig {
    fn default_r() -> f64 {
        0.1
    }
    fn default_phi() -> f64 {
        0.002
    }
    fn default_d_rd() -> f64 {
        800.0
    }
    fn default_kappa() -> f64 {
        0.02
    }
    fn default_rho() -> f64 {
        0.5
    }
    fn default_alpha() -> f64 {
        10.0
    }
    fn default_beta() -> f64 {
        5.0
    }
    fn default_xi() -> f64 {
        2.0
    }
}

impl Default for FsoConfig {
    fn default() -> Self {
        FsoConfig {
            r: Self::default_r(),
            phi: Self::default_phi(),
            d_rd: Self::default_d_rd(),
            kappa: Self::default_kappa(),
            rho: Self::default_rho(),
            alpha: Self::default_alpha(),
            beta: Self::default_beta(),
            xi: Self::default_xi(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceConfig {
    /// Scaling K_I of the interferer received powers.
    #[serde(default = "InterferenceConfig::default_k_i")]
    pub k_i_factor: f64,
    /// Per-interferer received-power bound P0, dBm.
    #[serde(default)]
    pub p0_dbm: f64,
    #[serde(default = "InterferenceConfig::default_count")]
    pub count: usize,
    /// Normalized powers u_k; defaults to [`U10`] when `count` is 10.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_vector: Option<Vec<f64>>,
}

impl InterferenceConfig {
    fn default_k_i() -> f64 {
        1.0
    }
    fn default_count() -> usize {
        10
    }
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        InterferenceConfig {
            k_i_factor: Self::default_k_i(),
            p0_dbm: 0.0,
            count: Self::default_count(),
            u_vector: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Total transmit power P, dBm.
    pub total_power_dbm: f64,
    /// Power back-off step s, dB.
    pub backoff_step_db: f64,
    /// Path-loss gain of the stronger user (linear).
    pub l1: f64,
    /// Path-loss gain of the weaker user (linear).
    pub l2: f64,
    /// Relay noise power, W.
    #[serde(default = "ScenarioConfig::default_noise_relay")]
    pub noise_relay: f64,
    /// Destination noise variance, A^2.
    #[serde(default = "ScenarioConfig::default_noise_dest")]
    pub noise_dest: f64,
    /// Electrical-to-optical conversion ratio.
    #[serde(default = "ScenarioConfig::default_eta")]
    pub eta: f64,
    /// Relay amplification gain G.
    #[serde(default = "ScenarioConfig::default_relay_gain")]
    pub relay_gain: f64,
    #[serde(default)]
    pub fso: FsoConfig,
    #[serde(default)]
    pub interference: InterferenceConfig,
}

impl ScenarioConfig {
    fn default_noise_relay() -> f64 {
        1e-11
    }
    fn default_noise_dest() -> f64 {
        1e-14
    }
    fn default_eta() -> f64 {
        1.0
    }
    fn default_relay_gain() -> f64 {
        100.0
    }

    /// Default link parameters around the given powers and path losses.
    pub fn new(total_power_dbm: f64, backoff_step_db: f64, l1: f64, l2: f64) -> Self {
        ScenarioConfig {
            total_power_dbm,
            backoff_step_db,
            l1,
            l2,
            noise_relay: Self::default_noise_relay(),
            noise_dest: Self::default_noise_dest(),
            eta: Self::default_eta(),
            relay_gain: Self::default_relay_gain(),
            fso: FsoConfig::default(),
            interference: InterferenceConfig::default(),
        }
    }

    /// True when the interferer vector comes from [`U10`] rather than the file.
    pub fn uses_default_u_vector(&self) -> bool {
        self.interference.u_vector.is_none() && self.interference.count == U10.len()
    }

    pub fn u_vector(&self) -> Result<Vec<f64>> {
        match (&self.interference.u_vector, self.interference.count) {
            (Some(u), _) => Ok(u.clone()),
            (None, 10) => Ok(U10.to_vec()),
            (None, 0) => Ok(Vec::new()),
            (None, k) => Err(Error::invalid(
                "interference.u_vector",
                format!("required when count = {k} (only K = 10 has a default)"),
            )),
        }
    }

    /// Every rule violation, not just the first.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut need = |field: &str, ok: bool, reason: &str| {
            if !ok {
                out.push(Issue::new(field, reason));
            }
        };
        let pos = |x: f64| x > 0.0 && x.is_finite();
        need(
            "total_power_dbm",
            self.total_power_dbm.is_finite(),
            "must be finite",
        );
        need(
            "backoff_step_db",
            self.backoff_step_db >= 0.0 && self.backoff_step_db.is_finite(),
            "must be finite and >= 0",
        );
        need("l1", pos(self.l1), "must be > 0");
        need("l2", pos(self.l2), "must be > 0");
        need(
            "l1",
            !(pos(self.l1) && pos(self.l2)) || self.l1 >= self.l2,
            "users are ordered by path-loss gain: l1 >= l2 is required",
        );
        need("noise_relay", pos(self.noise_relay), "must be > 0");
        need("noise_dest", pos(self.noise_dest), "must be > 0");
        need("eta", pos(self.eta), "must be > 0");
        need("relay_gain", pos(self.relay_gain), "must be > 0");
        let f = &self.fso;
        need("fso.r", pos(f.r), "must be > 0");
        need("fso.phi", pos(f.phi), "must be > 0");
        need("fso.d_rd", pos(f.d_rd), "must be > 0");
        need(
            "fso.kappa",
            f.kappa >= 0.0 && f.kappa.is_finite(),
            "must be >= 0",
        );
        need("fso.rho", pos(f.rho), "must be > 0");
        need("fso.alpha", pos(f.alpha), "must be > 0");
        need("fso.beta", pos(f.beta), "must be > 0");
        need(
            "fso.beta",
            !(pos(f.alpha) && pos(f.beta)) || f.alpha >= f.beta,
            "alpha >= beta is required",
        );
        need("fso.xi", pos(f.xi), "must be > 0");
        let i = &self.interference;
        need(
            "interference.k_i_factor",
            i.k_i_factor >= 0.0 && i.k_i_factor.is_finite(),
            "must be >= 0",
        );
        need(
            "interference.p0_dbm",
            i.p0_dbm.is_finite(),
            "must be finite",
        );
        match self.u_vector() {
            Ok(u) => {
                need(
                    "interference.u_vector",
                    u.len() == i.count,
                    "length must equal interference.count",
                );
                need(
                    "interference.u_vector",
                    u.iter().all(|&x| x > 0.0 && x < 1.0),
                    "every element must lie in (0, 1)",
                );
            }
            Err(Error::Invalid(mut v)) => out.append(&mut v),
            Err(_) => unreachable!("u_vector only fails with Invalid"),
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(issues))
        }
    }
}

/// SINR thresholds: per user and for the sum rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSet {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_sum: f64,
}

/// Threshold constants of one user. `j` is `None` for gamma >= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JConstants {
    pub j: Option<f64>,
    pub j1: Option<f64>,
    pub j2: Option<f64>,
}

impl JConstants {
    /// `lead` is 10^(s/10) for user 1 and 10^(-s/10) for user 2.
    pub fn new(gamma: f64, lead: f64) -> Self {
        if gamma >= 1.0 {
            return JConstants {
                j: None,
                j1: None,
                j2: None,
            };
        }
        let trail = 1.0 / lead;
        let j = lead * gamma / (1.0 - gamma);
        JConstants {
            j: Some(j),
            j1: Some(j * (1.0 + trail)),
            j2: Some(gamma + j * (1.0 + gamma * trail)),
        }
    }
}

impl ThresholdSet {
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        for (name, v) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma_sum", self.gamma_sum),
        ] {
            if !(v > 0.0) || v.is_nan() {
                issues.push(Issue::new(name, "must be > 0"));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(issues))
        }
    }

    pub fn user1(&self, backoff_db: f64) -> JConstants {
        JConstants::new(self.gamma1, db_to_linear(backoff_db))
    }

    pub fn user2(&self, backoff_db: f64) -> JConstants {
        JConstants::new(self.gamma2, db_to_linear(-backoff_db))
    }
}

/// Contents of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioConfig,
    pub thresholds: ThresholdSet,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues = self.scenario.issues();
        if let Err(Error::Invalid(mut v)) = self.thresholds.validate() {
            for i in &mut v {
                i.field = format!("thresholds.{}", i.field);
            }
            issues.append(&mut v);
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(issues))
        }
    }
}

/// (a1, a2) such that a1 L1 = a2 L2 10^(s/10).
pub fn power_allocation(l1: f64, l2: f64, s_db: f64) -> Result<(f64, f64)> {
    if !(l2 > 0.0) || !(l1 >= l2) || !l1.is_finite() {
        return Err(Error::invalid("l1", "l1 >= l2 > 0 is required"));
    }
    if !(s_db >= 0.0) || !s_db.is_finite() {
        return Err(Error::invalid("backoff_step_db", "must be finite and >= 0"));
    }
    Ok(split(l1, l2, s_db))
}

fn split(l1: f64, l2: f64, s_db: f64) -> (f64, f64) {
    let t = l2 * db_to_linear(s_db);
    (t / (l1 + t), l1 / (l1 + t))
}

/// (P(pi1), P(pi2)).
pub fn decoding_order_probs(s_db: f64) -> (f64, f64) {
    (
        1.0 / (1.0 + db_to_linear(-s_db)),
        1.0 / (1.0 + db_to_linear(s_db)),
    )
}

/// Rate in bits/s/Hz to SINR threshold.
pub fn threshold_from_rate(r_bits: f64) -> f64 {
    r_bits.exp2() - 1.0
}

/// Threshold an OMA user needs in half the time to match rate log2(1 + gamma).
pub fn oma_threshold(gamma_th: f64) -> f64 {
    (1.0 + gamma_th).powi(2) - 1.0
}

/// Per-scenario constants, in linear units.
///
/// Indices refer to the NOMA users. [`DerivedParams::mirrored`] swaps them
/// (and negates s), which is how user-2 quantities relate to user-1 ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    pub a1: f64,
    pub a2: f64,
    pub l1: f64,
    pub l2: f64,
    pub backoff_db: f64,
    pub total_power_w: f64,
    pub noise_relay: f64,
    pub g_l: f64,
    pub a0: f64,
    pub c_d: f64,
    pub interferer_powers: Vec<f64>,
    pub p_pi1: f64,
    pub p_pi2: f64,
    pub fso: FsoChannelParams,
}

impl DerivedParams {
    /// Average received power a_i L_i P of user `1` or `2`.
    pub fn own_power(&self, user: u8) -> f64 {
        match user {
            1 => self.a1 * self.l1 * self.total_power_w,
            _ => self.a2 * self.l2 * self.total_power_w,
        }
    }

    /// Full-power received power L_i P used by the OMA baseline.
    pub fn oma_power(&self, user: u8) -> f64 {
        match user {
            1 => self.l1 * self.total_power_w,
            _ => self.l2 * self.total_power_w,
        }
    }

    /// The same scenario with another back-off step; s may be negative here.
    pub fn with_backoff(&self, s_db: f64) -> DerivedParams {
        let (a1, a2) = split(self.l1, self.l2, s_db);
        let (p_pi1, p_pi2) = decoding_order_probs(s_db);
        DerivedParams {
            a1,
            a2,
            backoff_db: s_db,
            p_pi1,
            p_pi2,
            ..self.clone()
        }
    }

    /// Users relabelled: (L1, L2, s) becomes (L2, L1, -s).
    pub fn mirrored(&self) -> DerivedParams {
        DerivedParams {
            a1: self.a2,
            a2: self.a1,
            l1: self.l2,
            l2: self.l1,
            backoff_db: -self.backoff_db,
            p_pi1: self.p_pi2,
            p_pi2: self.p_pi1,
            ..self.clone()
        }
    }
}

pub fn derive(cfg: &ScenarioConfig) -> Result<DerivedParams> {
    cfg.validate()?;
    let (a1, a2) = power_allocation(cfg.l1, cfg.l2, cfg.backoff_step_db)?;
    let (p_pi1, p_pi2) = decoding_order_probs(cfg.backoff_step_db);
    let f = &cfg.fso;
    let g_l = fso_path_loss(f.rho, f.kappa, f.d_rd)?;
    let a0 = geometric_loss_a0(f.r, f.phi, f.d_rd)?;
    let fso = FsoChannelParams::new(f.alpha, f.beta, f.xi, a0, g_l)?;
    let c_d = cfg.noise_dest / (cfg.eta.powi(2) * g_l.powi(2) * cfg.relay_gain.powi(2));
    let scale = cfg.interference.k_i_factor * dbm_to_watts(cfg.interference.p0_dbm) * cfg.l2;
    let interferer_powers = cfg.u_vector()?.iter().map(|u| scale * u).collect();
    Ok(DerivedParams {
        a1,
        a2,
        l1: cfg.l1,
        l2: cfg.l2,
        backoff_db: cfg.backoff_step_db,
        total_power_w: dbm_to_watts(cfg.total_power_dbm),
        noise_relay: cfg.noise_relay,
        g_l,
        a0,
        c_d,
        interferer_powers,
        p_pi1,
        p_pi2,
        fso,
    })
}
