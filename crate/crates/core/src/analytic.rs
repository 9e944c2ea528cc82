//! Closed-form outage probabilities of the two NOMA users, the sum-rate
//! outage, and the time-division (OMA) baseline.
//!
//! Every expression is built from one factor,
//!
//! ```text
//! E(C) = exp(-C sigma_R^2 / W) * G(C C_D / W) * prod_k W / (W + C L'_k p'_k),
//! ```
//!
//! the probability that a unit-mean exponential exceeds C times the
//! normalized interference-plus-noise of a user with average received power
//! W. It is kept in log space; `1 - E` is formed with `expm1` so small
//! outages keep their digits.
//!
//! User-2 quantities are the user-1 ones with the users relabelled and the
//! back-off step negated. Both are evaluated through the same [`View`].

use crate::channel::BigGCache;
use crate::error::{Error, Result};
use crate::specfun::QuadratureSpec;
use crate::system::{oma_threshold, DerivedParams, JConstants, ThresholdSet};

/// Values within this distance of [0, 1] are clamped; anything further out
/// is reported as an error.
pub const EXCURSION_ALLOWANCE: f64 = 1e-9;

/// Back-off steps with |s| at or below this (dB) use the two-sided limit.
pub const SUM_RATE_S_EPS: f64 = 1e-6;
/// Probe offset (dB) for the two-sided limit.
pub const SUM_RATE_S_PROBE: f64 = 1e-3;

/// prod_k W / (W + c L'_k p'_k).
pub fn interference_product(c: f64, user_power: f64, d: &DerivedParams) -> f64 {
    (-ln_interference(c, user_power, d)).exp()
}

/// -ln of [`interference_product`].
fn ln_interference(c: f64, user_power: f64, d: &DerivedParams) -> f64 {
    d.interferer_powers
        .iter()
        .map(|p| (c * p / user_power).ln_1p())
        .sum()
}

fn bounded(quantity: &'static str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else if (-EXCURSION_ALLOWANCE..=1.0 + EXCURSION_ALLOWANCE).contains(&v) {
        Ok(v.clamp(0.0, 1.0))
    } else {
        Err(Error::NumericInconsistency { quantity, value: v })
    }
}

/// ln E(C) for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub ln: f64,
}

impl Coverage {
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn complement(&self) -> f64 {
        -self.ln.exp_m1()
    }

    /// E(self) - E(other), accurate when the two are close.
    fn minus(&self, other: &Coverage) -> f64 {
        if other.ln == f64::NEG_INFINITY {
            return self.value();
        }
        self.value() * -(other.ln - self.ln).exp_m1()
    }
}

/// One user's side of the problem: its average received power, the power
/// ratio to the partner (`lead` = own/partner), and the probability of
/// being decoded second.
#[derive(Debug, Clone, Copy)]
struct View {
    own: f64,
    lead: f64,
    trail: f64,
    p_second: f64,
}

/// Every probability of one scenario point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageBreakdown {
    pub p_joint_below_u1_pi1: f64,
    pub p_joint_below_u2_pi2: f64,
    pub p_joint_above_u1_pi2: f64,
    pub p_joint_above_u2_pi1: f64,
    pub p_out_u1: f64,
    pub p_out_u2: f64,
    pub p_out_sum: f64,
    pub oma_u1: f64,
    pub oma_u2: f64,
}

/// Evaluator bound to one set of derived parameters.
pub struct Analytic<'a> {
    d: &'a DerivedParams,
    cache: &'a BigGCache,
    spec: QuadratureSpec,
}

impl<'a> Analytic<'a> {
    /// Uses [`QuadratureSpec::precise`], since several expressions are
    /// differences of nearly equal terms.
    pub fn new(d: &'a DerivedParams, cache: &'a BigGCache) -> Self {
        Analytic {
            d,
            cache,
            spec: QuadratureSpec::precise(),
        }
    }

    pub fn with_spec(mut self, spec: QuadratureSpec) -> Self {
        self.spec = spec;
        self
    }

    pub fn derived(&self) -> &DerivedParams {
        self.d
    }

    fn view(&self, user: u8) -> View {
        let s = if user == 1 {
            self.d.backoff_db
        } else {
            -self.d.backoff_db
        };
        let lead = 10f64.powf(s / 10.0);
        let p_second = if user == 1 {
            self.d.p_pi2
        } else {
            self.d.p_pi1
        };
        View {
            own: self.d.own_power(user),
            lead,
            trail: 1.0 / lead,
            p_second,
        }
    }

    /// E(C) for a user with average received power `own`.
    pub fn coverage(&self, c: f64, own: f64) -> Result<Coverage> {
        if c == 0.0 {
            return Ok(Coverage { ln: 0.0 });
        }
        let g = self
            .cache
            .get(c * self.d.c_d / own, &self.d.fso, &self.spec)?;
        let ln = -c * self.d.noise_relay / own + g.ln_value() - ln_interference(c, own, self.d);
        Ok(Coverage { ln })
    }

    /// Pr(SINR < gamma, user decoded first).
    fn joint_below(&self, v: View, gamma: f64) -> Result<f64> {
        let e_g = self.coverage(gamma, v.own)?;
        let raw = match JConstants::new(gamma, v.lead) {
            JConstants {
                j1: Some(j1),
                j2: Some(j2),
                ..
            } => {
                let e1 = self.coverage(j1, v.own)?;
                let e2 = self.coverage(j2, v.own)?;
                v.lead / (1.0 + v.lead) * e1.complement()
                    - v.lead / (gamma + v.lead) * e_g.minus(&e2)
            }
            _ => 1.0 / (1.0 + v.trail) - v.lead / (gamma + v.lead) * e_g.value(),
        };
        bounded("joint_below", raw)
    }

    /// Pr(SINR > gamma, user decoded second).
    fn joint_above_second(&self, v: View, gamma: f64) -> Result<Coverage> {
        let e = self.coverage(gamma * (1.0 + v.lead), v.own)?;
        Ok(Coverage {
            ln: e.ln - v.lead.ln_1p(),
        })
    }

    /// Pr(SINR > gamma, user decoded first), summed directly from the
    /// coverage region rather than as P(pi) minus the outage part.
    fn joint_above_first(&self, v: View, gamma: f64) -> Result<f64> {
        let e_g = self.coverage(gamma, v.own)?;
        let raw = match JConstants::new(gamma, v.lead) {
            JConstants {
                j1: Some(j1),
                j2: Some(j2),
                ..
            } => {
                let e1 = self.coverage(j1, v.own)?;
                let e2 = self.coverage(j2, v.own)?;
                e_g.minus(&e2) / (1.0 + gamma * v.trail) + e1.value() / (1.0 + v.trail)
            }
            _ => e_g.value() / (1.0 + gamma * v.trail),
        };
        bounded("joint_above_first", raw)
    }

    pub fn joint_below_u1(&self, thr: &ThresholdSet) -> Result<f64> {
        self.joint_below(self.view(1), thr.gamma1)
    }

    pub fn joint_below_u2(&self, thr: &ThresholdSet) -> Result<f64> {
        self.joint_below(self.view(2), thr.gamma2)
    }

    pub fn joint_above_u1_pi2(&self, thr: &ThresholdSet) -> Result<f64> {
        bounded(
            "joint_above_u1_pi2",
            self.joint_above_second(self.view(1), thr.gamma1)?.value(),
        )
    }

    pub fn joint_above_u2_pi1(&self, thr: &ThresholdSet) -> Result<f64> {
        bounded(
            "joint_above_u2_pi1",
            self.joint_above_second(self.view(2), thr.gamma2)?.value(),
        )
    }

    /// Pr(SINR_1 > gamma1, pi1) by direct summation.
    pub fn joint_above_u1_pi1(&self, thr: &ThresholdSet) -> Result<f64> {
        self.joint_above_first(self.view(1), thr.gamma1)
    }

    /// Pr(SINR_2 > gamma2, pi2) by direct summation.
    pub fn joint_above_u2_pi2(&self, thr: &ThresholdSet) -> Result<f64> {
        self.joint_above_first(self.view(2), thr.gamma2)
    }

    /// Pr(SINR_1 < gamma1, pi2), the complement of the decoded-second term.
    pub fn joint_below_u1_pi2(&self, thr: &ThresholdSet) -> Result<f64> {
        let v = self.view(1);
        let above = self.joint_above_second(v, thr.gamma1)?;
        let e = Coverage {
            ln: above.ln + v.lead.ln_1p(),
        };
        bounded("joint_below_u1_pi2", v.p_second * e.complement())
    }

    /// Outage of `me` given the partner's view and thresholds. The partner
    /// must be decoded (first) before `me` can be decoded second.
    fn outage(&self, me: View, gamma_me: f64, other: View, gamma_other: f64) -> Result<f64> {
        let below_me = self.joint_below(me, gamma_me)?;
        let below_other = self.joint_below(other, gamma_other)?;
        let second = self.coverage(gamma_me * (1.0 + me.lead), me.own)?;
        // 1 - [(P1 - b1) + (P2 - b2) * P2 E / P2] rearranged into positive terms
        let e = second.value();
        let out = below_me + me.p_second * second.complement() + below_other * e;
        bounded("p_out", out)
    }

    pub fn outage_user1(&self, thr: &ThresholdSet) -> Result<f64> {
        self.outage(self.view(1), thr.gamma1, self.view(2), thr.gamma2)
    }

    pub fn outage_user2(&self, thr: &ThresholdSet) -> Result<f64> {
        self.outage(self.view(2), thr.gamma2, self.view(1), thr.gamma1)
    }

    /// Pr(gamma_sum < threshold).
    pub fn outage_sum(&self, gamma_sum: f64) -> Result<f64> {
        if self.d.backoff_db.abs() <= SUM_RATE_S_EPS {
            let mut acc = 0.0;
            for s in [-SUM_RATE_S_PROBE, SUM_RATE_S_PROBE] {
                let d = self.d.with_backoff(s);
                let a = Analytic {
                    d: &d,
                    cache: self.cache,
                    spec: self.spec,
                };
                acc += a.outage_sum_raw(gamma_sum)?;
            }
            return bounded("p_out_sum", 0.5 * acc);
        }
        bounded("p_out_sum", self.outage_sum_raw(gamma_sum)?)
    }

    fn outage_sum_raw(&self, gamma_sum: f64) -> Result<f64> {
        let v = self.view(1);
        let t = v.lead;
        let near = self.coverage(gamma_sum, v.own)?.complement();
        let far = self.coverage(gamma_sum * t, v.own)?.complement();
        Ok((t * near - far) / (t - 1.0))
    }

    /// Outage of one user alone at full power with the OMA threshold.
    pub fn oma_outage(&self, user: u8, gamma_th: f64) -> Result<f64> {
        let c = oma_threshold(gamma_th);
        bounded(
            "oma_outage",
            self.coverage(c, self.d.oma_power(user))?.complement(),
        )
    }

    pub fn breakdown(&self, thr: &ThresholdSet) -> Result<OutageBreakdown> {
        Ok(OutageBreakdown {
            p_joint_below_u1_pi1: self.joint_below_u1(thr)?,
            p_joint_below_u2_pi2: self.joint_below_u2(thr)?,
            p_joint_above_u1_pi2: self.joint_above_u1_pi2(thr)?,
            p_joint_above_u2_pi1: self.joint_above_u2_pi1(thr)?,
            p_out_u1: self.outage_user1(thr)?,
            p_out_u2: self.outage_user2(thr)?,
            p_out_sum: self.outage_sum(thr.gamma_sum)?,
            oma_u1: self.oma_outage(1, thr.gamma1)?,
            oma_u2: self.oma_outage(2, thr.gamma2)?,
        })
    }
}
