//! Sample-based estimates of every probability the analytic module
//! computes, taken straight from the per-realization SINRs.
//!
//! The iteration space is cut into blocks of [`BLOCK`] draws. Block `b`
//! runs on ChaCha8 seeded with `seed` on stream `b`, so a block's draws do
//! not depend on which worker runs it. Per-block counts are merged in block
//! order, which makes every estimate independent of the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::channel::{FadingSampler, FsoChannelParams};
use crate::error::{Error, Result};
use crate::system::{oma_threshold, DerivedParams, ThresholdSet};

/// Draws per random substream.
pub const BLOCK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub iterations: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl McSettings {
    pub fn new(iterations: u64, seed: u64) -> Self {
        McSettings {
            iterations,
            seed,
            workers: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "must be >= 1"));
        }
        Ok(())
    }
}

/// One realization of every random gain.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingSample {
    pub h1_sq: f64,
    pub h2_sq: f64,
    pub interferer_sq: Vec<f64>,
    pub g_f: f64,
    pub g_p: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Pi1,
    Pi2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTuple {
    pub g1_pi1: f64,
    pub g2_pi1: f64,
    pub g1_pi2: f64,
    pub g2_pi2: f64,
    pub order: Order,
    pub gamma_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Plain indicator mean.
    Indicator,
    /// Empirical joints combined with the same ratio as the closed form.
    FormulaConsistent,
    /// Per-draw test of the whole decoding chain.
    EventLevel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n: u64,
    pub seed: u64,
    pub estimator: Estimator,
}

impl OutageEstimate {
    /// Standard error floored at 1/n, the smallest step the estimator can
    /// resolve.
    pub fn resolved_std_err(&self) -> f64 {
        self.std_err.max(1.0 / self.n.max(1) as f64)
    }
}

fn fill_sample<R: Rng + ?Sized>(rng: &mut R, sampler: &FadingSampler, s: &mut FadingSample) {
    s.h1_sq = rng.sample(Exp1);
    s.h2_sq = rng.sample(Exp1);
    for x in s.interferer_sq.iter_mut() {
        *x = rng.sample(Exp1);
    }
    let (gf, gp) = sampler.composite(rng);
    s.g_f = gf;
    s.g_p = gp;
    s.g = gf * gp;
}

fn empty_sample(k: usize) -> FadingSample {
    FadingSample {
        h1_sq: 0.0,
        h2_sq: 0.0,
        interferer_sq: vec![0.0; k],
        g_f: 0.0,
        g_p: 0.0,
        g: 0.0,
    }
}

/// Draw order: h1, h2, the K interferers, g_f, g_p.
pub fn draw_sample<R: Rng + ?Sized>(rng: &mut R, d: &DerivedParams) -> FadingSample {
    let mut s = empty_sample(d.interferer_powers.len());
    fill_sample(rng, &FadingSampler::new(&d.fso), &mut s);
    s
}

/// Interference-plus-noise seen by whichever user is decoded last.
fn common_term(s: &FadingSample, d: &DerivedParams) -> f64 {
    let g2 = s.g * s.g;
    let interf: f64 = d
        .interferer_powers
        .iter()
        .zip(&s.interferer_sq)
        .map(|(p, h)| p * h)
        .sum();
    g2 * interf + g2 * d.noise_relay + d.c_d
}

pub fn sinr_eval(s: &FadingSample, d: &DerivedParams) -> SinrTuple {
    let g2 = s.g * s.g;
    let s1 = d.own_power(1) * g2 * s.h1_sq;
    let s2 = d.own_power(2) * g2 * s.h2_sq;
    let common = common_term(s, d);
    let order = if d.a1 * d.l1 * s.h1_sq >= d.a2 * d.l2 * s.h2_sq {
        Order::Pi1
    } else {
        Order::Pi2
    };
    SinrTuple {
        g1_pi1: s1 / (s2 + common),
        g2_pi1: s2 / common,
        g1_pi2: s1 / common,
        g2_pi2: s2 / (s1 + common),
        order,
        gamma_sum: (s1 + s2) / common,
    }
}

/// Event counts of one block (or of the whole run after merging).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    n: u64,
    pi1: u64,
    /// pi1 and user 1 decoded.
    a: u64,
    /// pi2 and user 2 decoded.
    b: u64,
    /// pi2 and user 1 above its threshold after cancellation.
    c: u64,
    /// pi1 and user 2 above its threshold after cancellation.
    d: u64,
    bc: u64,
    ad: u64,
    sum_below: u64,
    oma1_below: u64,
    oma2_below: u64,
}

impl Counts {
    fn merge(mut self, o: &Counts) -> Counts {
        self.n += o.n;
        self.pi1 += o.pi1;
        self.a += o.a;
        self.b += o.b;
        self.c += o.c;
        self.d += o.d;
        self.bc += o.bc;
        self.ad += o.ad;
        self.sum_below += o.sum_below;
        self.oma1_below += o.oma1_below;
        self.oma2_below += o.oma2_below;
        self
    }
}

struct Thresholds {
    g1: f64,
    g2: f64,
    sum: f64,
    oma1: f64,
    oma2: f64,
}

fn run_block(d: &DerivedParams, t: &Thresholds, seed: u64, block: u64, len: u64) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let sampler = FadingSampler::new(&d.fso);
    let mut s = empty_sample(d.interferer_powers.len());
    let mut c = Counts {
        n: len,
        ..Counts::default()
    };
    let full1 = d.oma_power(1);
    let full2 = d.oma_power(2);
    for _ in 0..len {
        fill_sample(&mut rng, &sampler, &mut s);
        let q = sinr_eval(&s, d);
        match q.order {
            Order::Pi1 => {
                c.pi1 += 1;
                let a = !(q.g1_pi1 < t.g1);
                let dd = !(q.g2_pi1 < t.g2);
                c.a += a as u64;
                c.d += dd as u64;
                c.ad += (a && dd) as u64;
            }
            Order::Pi2 => {
                let b = !(q.g2_pi2 < t.g2);
                let cc = !(q.g1_pi2 < t.g1);
                c.b += b as u64;
                c.c += cc as u64;
                c.bc += (b && cc) as u64;
            }
        }
        c.sum_below += (q.gamma_sum < t.sum) as u64;
        let g2 = s.g * s.g;
        let common = common_term(&s, d);
        c.oma1_below += (full1 * g2 * s.h1_sq / common < t.oma1) as u64;
        c.oma2_below += (full2 * g2 * s.h2_sq / common < t.oma2) as u64;
    }
    c
}

fn for_blocks<T, F>(settings: &McSettings, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    settings.validate()?;
    let n = settings.iterations;
    let blocks = n.div_ceil(BLOCK);
    let work = || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let len = BLOCK.min(n - b * BLOCK);
                f(b, len)
            })
            .collect::<Vec<T>>()
    };
    match settings.workers {
        None => Ok(work()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            Ok(pool.install(work))
        }
    }
}

/// Every Monte-Carlo estimate of one scenario point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub p_pi1: OutageEstimate,
    pub p_pi2: OutageEstimate,
    pub joint_below_u1_pi1: OutageEstimate,
    pub joint_above_u1_pi1: OutageEstimate,
    pub joint_below_u2_pi2: OutageEstimate,
    pub joint_above_u2_pi2: OutageEstimate,
    pub joint_above_u1_pi2: OutageEstimate,
    pub joint_above_u2_pi1: OutageEstimate,
    pub out_u1: OutageEstimate,
    pub out_u2: OutageEstimate,
    pub out_u1_event: OutageEstimate,
    pub out_u2_event: OutageEstimate,
    pub out_sum: OutageEstimate,
    pub oma_u1: OutageEstimate,
    pub oma_u2: OutageEstimate,
}

pub fn estimate(d: &DerivedParams, thr: &ThresholdSet, settings: &McSettings) -> Result<McReport> {
    let t = Thresholds {
        g1: thr.gamma1,
        g2: thr.gamma2,
        sum: thr.gamma_sum,
        oma1: oma_threshold(thr.gamma1),
        oma2: oma_threshold(thr.gamma2),
    };
    let parts = for_blocks(settings, |b, len| run_block(d, &t, settings.seed, b, len))?;
    let c = parts.iter().fold(Counts::default(), |acc, p| acc.merge(p));
    Ok(report(&c, settings.seed))
}

fn report(c: &Counts, seed: u64) -> McReport {
    let n = c.n;
    let pi2 = n - c.pi1;
    let ind = |k: u64| indicator(k, n, seed);
    McReport {
        p_pi1: ind(c.pi1),
        p_pi2: ind(pi2),
        joint_below_u1_pi1: ind(c.pi1 - c.a),
        joint_above_u1_pi1: ind(c.a),
        joint_below_u2_pi2: ind(pi2 - c.b),
        joint_above_u2_pi2: ind(c.b),
        joint_above_u1_pi2: ind(c.c),
        joint_above_u2_pi1: ind(c.d),
        out_u1: formula_outage(n, c.a, c.b, c.c, c.bc, pi2, seed),
        out_u2: formula_outage(n, c.b, c.a, c.d, c.ad, c.pi1, seed),
        out_u1_event: OutageEstimate {
            estimator: Estimator::EventLevel,
            ..ind(n - c.a - c.bc)
        },
        out_u2_event: OutageEstimate {
            estimator: Estimator::EventLevel,
            ..ind(n - c.b - c.ad)
        },
        out_sum: ind(c.sum_below),
        oma_u1: ind(c.oma1_below),
        oma_u2: ind(c.oma2_below),
    }
}

fn indicator(k: u64, n: u64, seed: u64) -> OutageEstimate {
    let v = k as f64 / n as f64;
    OutageEstimate {
        value: v,
        std_err: (v * (1.0 - v) / n as f64).sqrt(),
        n,
        seed,
        estimator: Estimator::Indicator,
    }
}

/// 1 - [p_own + p_partner * p_second / p_order] with a delta-method error.
///
/// `own` is the decoded-first coverage count, `partner` the partner's
/// decoded-first coverage under the other order, `second` this user's
/// post-cancellation coverage under that order, `both` the joint count of
/// the last two and `order` the number of draws with that order.
fn formula_outage(
    n: u64,
    own: u64,
    partner: u64,
    second: u64,
    both: u64,
    order: u64,
    seed: u64,
) -> OutageEstimate {
    let nf = n as f64;
    let (value, var) = if order == 0 {
        let p = own as f64 / nf;
        (1.0 - p, p * (1.0 - p) / nf)
    } else {
        // exact rational form, so zero failures give exactly zero
        let num = (n - own) as u128 * order as u128 - partner as u128 * second as u128;
        let value = num as f64 / (nf * order as f64);
        let pa = own as f64 / nf;
        let pb = partner as f64 / nf;
        let pc = second as f64 / nf;
        let po = order as f64 / nf;
        let pbc = both as f64 / nf;
        // indicator vector (A, B, C, O); A is disjoint from the other three
        // and B, C are subsets of O
        let mean = [pa, pb, pc, po];
        let joint = |i: usize, j: usize| -> f64 {
            match (i.min(j), i.max(j)) {
                (x, y) if x == y => mean[x],
                (0, _) => 0.0,
                (1, 2) => pbc,
                (1, 3) => pb,
                (2, 3) => pc,
                _ => unreachable!(),
            }
        };
        let grad = [-1.0, -pc / po, -pb / po, pb * pc / (po * po)];
        let mut var = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                var += grad[i] * grad[j] * (joint(i, j) - mean[i] * mean[j]);
            }
        }
        (value, var.max(0.0) / nf)
    };
    OutageEstimate {
        value,
        std_err: var.sqrt(),
        n,
        seed,
        estimator: Estimator::FormulaConsistent,
    }
}

/// Sample mean of exp(-a / g^2) over composite-gain draws.
pub fn estimate_big_g(
    a: f64,
    p: &FsoChannelParams,
    settings: &McSettings,
) -> Result<OutageEstimate> {
    if !(a >= 0.0) {
        return Err(Error::Domain {
            func: "estimate_big_g",
            arg: a,
            expected: "a >= 0",
        });
    }
    let sampler = FadingSampler::new(p);
    let seed = settings.seed;
    let parts = for_blocks(settings, |b, len| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..len {
            let (gf, gp) = sampler.composite(&mut rng);
            let g = gf * gp;
            // work with 1 - exp(-a/g^2) to keep digits when a is small
            let c = -(-a / (g * g)).exp_m1();
            s1 += c;
            s2 += c * c;
        }
        (s1, s2)
    })?;
    let (s1, s2) = parts
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = settings.iterations;
    let nf = n as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    Ok(OutageEstimate {
        value: 1.0 - mean,
        std_err: (var / nf).sqrt(),
        n,
        seed,
        estimator: Estimator::Indicator,
    })
}
