//! Link-budget constants, fading densities and samplers, and the FSO
//! expectation G(A) = E[exp(-A / g^2)] over the composite backhaul gain.
//!
//! The composite gain is g = g_p * g_f where g_f is unit-mean Gamma-Gamma
//! turbulence and g_p = A0 * U^(1/xi^2) is the pointing loss. Its density,
//!
//! ```text
//! f(g) = (a b xi^2) / (A0 Gamma(a) Gamma(b)) * G^{3,0}_{1,3}[ a b g / A0 | xi^2 ; xi^2 - 1, a - 1, b - 1 ]
//! ```
//!
//! is evaluated here through the equivalent single integral
//!
//! ```text
//! f(g) = xi^2 / A0^(xi^2) * g^(xi^2 - 1) * int_{g/A0}^inf f_gg(y) y^(-xi^2) dy
//! ```
//!
//! with the Bessel-K form of the Gamma-Gamma density f_gg. G(A) is the
//! corresponding double integral. Both are carried out over sigma = ln g_f,
//! and the pointing variable is replaced by tau = -ln U, so that the inner
//! factor becomes
//!
//! ```text
//! h(b) = int_0^inf exp(-b e^(2 tau / xi^2)) e^(-tau) dtau,   b = A / (A0 g_f)^2.
//! ```

use std::collections::HashMap;
use std::sync::RwLock;

use rand::distr::OpenClosed01;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::specfun::{erf, integrate_fallible, ln_bessel_k, ln_gamma, QuadratureSpec};

/// g_l = rho * 10^(-kappa d / 10).
pub fn fso_path_loss(rho: f64, kappa: f64, d: f64) -> Result<f64> {
    positive("fso_path_loss", rho, "rho > 0")?;
    positive("fso_path_loss", d, "d > 0")?;
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::Domain {
            func: "fso_path_loss",
            arg: kappa,
            expected: "kappa >= 0",
        });
    }
    Ok(rho * 10f64.powf(-kappa * d / 10.0))
}

/// A0 = erf(sqrt(pi) r / (sqrt(2) phi d))^2.
pub fn geometric_loss_a0(r: f64, phi: f64, d: f64) -> Result<f64> {
    positive("geometric_loss_a0", r, "r > 0")?;
    positive("geometric_loss_a0", phi, "phi > 0")?;
    positive("geometric_loss_a0", d, "d > 0")?;
    let v = erf(std::f64::consts::PI.sqrt() * r / (std::f64::consts::SQRT_2 * phi * d));
    Ok(v * v)
}

fn positive(func: &'static str, x: f64, expected: &'static str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            func,
            arg: x,
            expected,
        })
    }
}

/// RF access-link gain. Power fading is unit-mean exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfLinkParams {
    pub path_loss: f64,
}

impl RfLinkParams {
    pub const FADING_MEAN: f64 = 1.0;

    pub fn new(path_loss: f64) -> Result<Self> {
        if !(path_loss > 0.0) || !path_loss.is_finite() {
            return Err(Error::invalid("path_loss", "must be > 0"));
        }
        Ok(RfLinkParams { path_loss })
    }
}

/// Backhaul parameters plus the precomputed shape of the density of ln g_f.
#[derive(Debug, Clone)]
pub struct FsoChannelParams {
    alpha: f64,
    beta: f64,
    xi: f64,
    a0: f64,
    g_l: f64,
    ln_norm: f64,
    sigma_max: f64,
}

impl PartialEq for FsoChannelParams {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
            && self.beta == other.beta
            && self.xi == other.xi
            && self.a0 == other.a0
            && self.g_l == other.g_l
    }
}

/// Truncation level for the upper tail of the turbulence density.
const TAIL_RATIO: f64 = 1e-18;

impl FsoChannelParams {
    pub fn new(alpha: f64, beta: f64, xi: f64, a0: f64, g_l: f64) -> Result<Self> {
        let mut issues = Vec::new();
        for (name, v) in [("alpha", alpha), ("beta", beta), ("xi", xi), ("g_l", g_l)] {
            if !(v > 0.0) || !v.is_finite() {
                issues.push(crate::error::Issue::new(name, "must be a finite value > 0"));
            }
        }
        if alpha < beta {
            issues.push(crate::error::Issue::new(
                "beta",
                format!("alpha >= beta is required (got alpha = {alpha}, beta = {beta})"),
            ));
        }
        if !(a0 > 0.0 && a0 <= 1.0) {
            issues.push(crate::error::Issue::new("a0", "must lie in (0, 1]"));
        }
        if !issues.is_empty() {
            return Err(Error::Invalid(issues));
        }
        let ln_norm = std::f64::consts::LN_2 + 0.5 * (alpha + beta) * (alpha * beta).ln()
            - ln_gamma(alpha)?
            - ln_gamma(beta)?;
        let mut p = FsoChannelParams {
            alpha,
            beta,
            xi,
            a0,
            g_l,
            ln_norm,
            sigma_max: f64::INFINITY,
        };
        p.sigma_max = p.find_sigma_max()?;
        Ok(p)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn a0(&self) -> f64 {
        self.a0
    }
    pub fn g_l(&self) -> f64 {
        self.g_l
    }

    /// Upper truncation point in ln g_f.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    fn ln_gg_at_log(&self, ln_y: f64) -> Result<f64> {
        let x = 2.0 * (self.alpha * self.beta).sqrt() * (0.5 * ln_y).exp();
        if x == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.ln_norm
            + (0.5 * (self.alpha + self.beta) - 1.0) * ln_y
            + ln_bessel_k(self.alpha - self.beta, x)?)
    }

    /// Density of ln g_f at sigma: f_gg(e^sigma) e^sigma.
    fn ln_phi(&self, sigma: f64) -> Result<f64> {
        Ok(self.ln_gg_at_log(sigma)? + sigma)
    }

    fn phi(&self, sigma: f64) -> Result<f64> {
        if sigma > self.sigma_max {
            return Ok(0.0);
        }
        Ok(self.ln_phi(sigma)?.exp())
    }

    fn find_sigma_max(&self) -> Result<f64> {
        let step = 0.05;
        let mut peak = (f64::NEG_INFINITY, 0.0);
        let mut s = -30.0;
        while s <= 30.0 {
            let v = self.ln_phi(s)?;
            if v > peak.0 {
                peak = (v, s);
            }
            s += step;
        }
        let cut = peak.0 + TAIL_RATIO.ln();
        let mut lo = peak.1;
        let mut hi = lo;
        while self.ln_phi(hi)? > cut {
            lo = hi;
            hi += 0.5;
            if hi > 200.0 {
                return Err(Error::invalid(
                    "fso",
                    "turbulence density tail does not decay within range",
                ));
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.ln_phi(mid)? > cut {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// Unit-mean Gamma-Gamma density.
pub fn gg_density(x: f64, p: &FsoChannelParams) -> Result<f64> {
    positive("gg_density", x, "x > 0")?;
    Ok(p.ln_gg_at_log(x.ln())?.exp())
}

/// Pointing-loss density: xi^2 / A0^(xi^2) x^(xi^2 - 1) on (0, A0].
pub fn pointing_density(x: f64, p: &FsoChannelParams) -> f64 {
    if !(x > 0.0 && x <= p.a0) {
        return 0.0;
    }
    let xi2 = p.xi * p.xi;
    xi2 / x * (xi2 * (x / p.a0).ln()).exp()
}

fn density_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-300,
        rel_tol: 1e-10,
        max_subdivisions: 2000,
    }
}

/// Density of the composite gain g = g_p g_f.
pub fn composite_density(g: f64, p: &FsoChannelParams) -> Result<f64> {
    positive("composite_density", g, "g > 0")?;
    let xi2 = p.xi * p.xi;
    let lo = (g / p.a0).ln();
    if lo >= p.sigma_max {
        return Ok(0.0);
    }
    let est = integrate_fallible(
        |s| {
            let v = p.ln_phi(s)? - xi2 * (s - lo);
            Ok(v.exp())
        },
        lo,
        p.sigma_max,
        &density_spec(),
    )?;
    Ok(xi2 / g * est.value)
}

/// Sampler for every FSO fading factor of one parameter set.
#[derive(Debug, Clone)]
pub struct FadingSampler {
    large: Gamma<f64>,
    small: Gamma<f64>,
    inv_xi2: f64,
    a0: f64,
}

impl FadingSampler {
    pub fn new(p: &FsoChannelParams) -> Self {
        // shapes were validated > 0, so construction cannot fail
        FadingSampler {
            large: Gamma::new(p.alpha, 1.0 / p.alpha).expect("validated shape"),
            small: Gamma::new(p.beta, 1.0 / p.beta).expect("validated shape"),
            inv_xi2: 1.0 / (p.xi * p.xi),
            a0: p.a0,
        }
    }

    pub fn gg<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = self.large.sample(rng);
        let y = self.small.sample(rng);
        x * y
    }

    pub fn pointing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(OpenClosed01);
        self.a0 * u.powf(self.inv_xi2)
    }

    /// Draws (g_f, g_p) in that order.
    pub fn composite<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let gf = self.gg(rng);
        let gp = self.pointing(rng);
        (gf, gp)
    }
}

pub fn sample_gg<R: Rng + ?Sized>(rng: &mut R, p: &FsoChannelParams) -> f64 {
    FadingSampler::new(p).gg(rng)
}

pub fn sample_pointing<R: Rng + ?Sized>(rng: &mut R, p: &FsoChannelParams) -> f64 {
    FadingSampler::new(p).pointing(rng)
}

pub fn sample_composite<R: Rng + ?Sized>(rng: &mut R, p: &FsoChannelParams) -> f64 {
    let (gf, gp) = FadingSampler::new(p).composite(rng);
    gf * gp
}

/// G(A) together with 1 - G(A), each accurate in its own right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigG {
    pub value: f64,
    pub complement: f64,
}

impl BigG {
    pub const ONE: BigG = BigG {
        value: 1.0,
        complement: 0.0,
    };

    pub fn ln_value(&self) -> f64 {
        if self.complement < 0.5 {
            (-self.complement).ln_1p()
        } else {
            self.value.ln()
        }
    }
}

/// Inner pointing average. With `complement` set, returns 1 - h(b).
fn pointing_factor(b: f64, q: f64, complement: bool, spec: &QuadratureSpec) -> Result<f64> {
    if complement {
        if b == 0.0 {
            return Ok(0.0);
        }
        if b > 40.0 {
            return Ok(1.0);
        }
    } else if b > 750.0 {
        return Ok(0.0);
    }
    let f = |t: f64| -> Result<f64> {
        let z = b * (q * t).exp();
        let w = if complement {
            -(-z).exp_m1()
        } else {
            (-z).exp()
        };
        Ok(if w == 0.0 { 0.0 } else { w * (-t).exp() })
    };
    // The integrand changes character where b e^(q tau) crosses 1. With
    // q < 1 a distant knee carries no mass and splitting there would hide
    // the e^(-tau) decay from the rule.
    let knee = -b.ln() / q;
    if knee > 0.0 && knee.is_finite() && (q > 1.0 || knee < 60.0) {
        let a = integrate_fallible(f, 0.0, knee, spec)?;
        let c = integrate_fallible(f, knee, f64::INFINITY, spec)?;
        Ok(a.value + c.value)
    } else {
        Ok(integrate_fallible(f, 0.0, f64::INFINITY, spec)?.value)
    }
}

/// G(A) = E[exp(-A / g^2)].
pub fn big_g(a: f64, p: &FsoChannelParams, spec: &QuadratureSpec) -> Result<f64> {
    Ok(big_g_pair(a, p, spec)?.value)
}

/// G(A) and its complement from the nested quadrature.
pub fn big_g_pair(a: f64, p: &FsoChannelParams, spec: &QuadratureSpec) -> Result<BigG> {
    if !(a >= 0.0) {
        return Err(Error::Domain {
            func: "big_g",
            arg: a,
            expected: "A >= 0",
        });
    }
    spec.validate()?;
    if a == 0.0 {
        return Ok(BigG::ONE);
    }
    if a == f64::INFINITY {
        return Ok(BigG {
            value: 0.0,
            complement: 1.0,
        });
    }
    let q = 2.0 / (p.xi * p.xi);
    let inner = spec.tightened(10.0);
    let ln_c = a.ln() - 2.0 * p.a0.ln();
    let outer = |complement: bool| -> Result<f64> {
        let f = |s: f64| -> Result<f64> {
            let phi = p.phi(s)?;
            if phi == 0.0 {
                return Ok(0.0);
            }
            let b = (ln_c - 2.0 * s).exp();
            Ok(phi * pointing_factor(b, q, complement, &inner)?)
        };
        // b = 1 at this point of the outer axis
        let knee = 0.5 * ln_c;
        if knee < p.sigma_max {
            let lower = integrate_fallible(f, f64::NEG_INFINITY, knee, spec)?;
            let upper = integrate_fallible(f, knee, p.sigma_max, spec)?;
            Ok(lower.value + upper.value)
        } else {
            Ok(integrate_fallible(f, f64::NEG_INFINITY, p.sigma_max, spec)?.value)
        }
    };
    let complement = outer(true)?.clamp(0.0, 1.0);
    if complement < 0.5 {
        Ok(BigG {
            value: 1.0 - complement,
            complement,
        })
    } else {
        let value = outer(false)?.clamp(0.0, 1.0);
        Ok(BigG {
            value,
            complement: 1.0 - value,
        })
    }
}

type CacheKey = [u64; 8];

/// Memo table for G(A), keyed on the exact bit patterns of its inputs.
/// Shared across threads.
#[derive(Debug, Default)]
pub struct BigGCache {
    map: RwLock<HashMap<CacheKey, BigG>>,
}

impl BigGCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, a: f64, p: &FsoChannelParams, spec: &QuadratureSpec) -> Result<BigG> {
        let key = [
            a.to_bits(),
            p.alpha.to_bits(),
            p.beta.to_bits(),
            p.xi.to_bits(),
            p.a0.to_bits(),
            spec.abs_tol.to_bits(),
            spec.rel_tol.to_bits(),
            spec.max_subdivisions as u64,
        ];
        if let Some(v) = self.map.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*v);
        }
        let v = big_g_pair(a, p, spec)?;
        self.map
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn erf_series(x: f64) -> f64 {
        let (mut term, mut sum, mut n) = (x, x, 0.0);
        loop {
            n += 1.0;
            term *= -x * x / n;
            let c = term / (2.0 * n + 1.0);
            sum += c;
            if c.abs() < 1e-18 * sum.abs() {
                return sum * 2.0 / std::f64::consts::PI.sqrt();
            }
        }
    }

    fn table_a0() -> f64 {
        geometric_loss_a0(0.1, 0.002, 800.0).unwrap()
    }

    fn params(alpha: f64, beta: f64, xi: f64) -> FsoChannelParams {
        FsoChannelParams::new(alpha, beta, xi, table_a0(), 0.5 * 10f64.powf(-1.6)).unwrap()
    }

    #[test]
    fn path_loss_values() {
        assert_eq!(fso_path_loss(1.0, 0.0, 1000.0).unwrap(), 1.0);
        let g = fso_path_loss(0.5, 0.02, 800.0).unwrap();
        assert!((g - 0.5 * 10f64.powf(-1.6)).abs() < 1e-16);
        assert!((g - 0.012559).abs() < 1e-6);
        assert!((fso_path_loss(0.5, 0.02, 1e-12).unwrap() - 0.5).abs() < 1e-12);
        assert!(fso_path_loss(0.0, 0.02, 800.0).is_err());
        assert!(fso_path_loss(0.5, 0.02, -1.0).is_err());
    }

    #[test]
    fn geometric_loss_values() {
        assert!((geometric_loss_a0(10.0, 0.002, 800.0).unwrap() - 1.0).abs() < 1e-12);
        let x = std::f64::consts::PI.sqrt() * 0.1 / (std::f64::consts::SQRT_2 * 0.002 * 800.0);
        let oracle = erf_series(x).powi(2);
        assert!((table_a0() - oracle).abs() < 1e-15);
        assert!((table_a0() - 7.78e-3).abs() < 1e-5);
        let tiny = geometric_loss_a0(1e-9, 0.002, 800.0).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-15);
        assert!(geometric_loss_a0(0.0, 0.002, 800.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(matches!(
            FsoChannelParams::new(5.0, 10.0, 2.0, 0.5, 0.1),
            Err(Error::Invalid(_))
        ));
        assert!(FsoChannelParams::new(10.0, 5.0, 2.0, 1.5, 0.1).is_err());
        assert!(FsoChannelParams::new(10.0, 5.0, 0.0, 0.5, 0.1).is_err());
        assert!(FsoChannelParams::new(10.0, 5.0, 2.0, 1.0, 0.1).is_ok());
    }

    #[test]
    fn gg_density_normalized_with_unit_mean() {
        let p = params(10.0, 5.0, 2.0);
        let spec = QuadratureSpec::precise();
        let mass = integrate(|x| gg_density(x, &p).unwrap(), 0.0, f64::INFINITY, &spec).unwrap();
        let mean = integrate(
            |x| x * gg_density(x, &p).unwrap(),
            0.0,
            f64::INFINITY,
            &spec,
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
        assert!((mean - 1.0).abs() < 1e-8, "{mean}");
        assert!(gg_density(0.0, &p).is_err());
    }

    #[test]
    fn pointing_density_values() {
        let p = params(10.0, 5.0, 2.0);
        let a0 = p.a0();
        let spec = QuadratureSpec::precise();
        let mass = integrate(|x| pointing_density(x, &p), 0.0, a0, &spec).unwrap();
        assert!((mass - 1.0).abs() < 1e-10);
        let mean = integrate(|x| x * pointing_density(x, &p), 0.0, a0, &spec).unwrap();
        assert!((mean - 4.0 * a0 / 5.0).abs() < 1e-12);
        assert!((pointing_density(a0, &p) - 4.0 / a0).abs() < 1e-9);
        assert!((pointing_density(a0, &p) - 514.1).abs() < 0.2);
        assert_eq!(pointing_density(1.01 * a0, &p), 0.0);
        assert_eq!(pointing_density(-1.0, &p), 0.0);
    }

    fn composite_mass_and_mean(p: &FsoChannelParams) -> (f64, f64) {
        // integrate over v = ln g so both the singular origin and the tail are tame
        let spec = QuadratureSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-9,
            max_subdivisions: 1000,
        };
        let hi = p.a0().ln() + p.sigma_max();
        let mass = integrate(
            |v| {
                let g = v.exp();
                if g == 0.0 {
                    return 0.0;
                }
                composite_density(g, p).unwrap() * g
            },
            f64::NEG_INFINITY,
            hi,
            &spec,
        )
        .unwrap();
        let mean = integrate(
            |v| {
                let g = v.exp();
                if g == 0.0 {
                    return 0.0;
                }
                composite_density(g, p).unwrap() * g * g
            },
            f64::NEG_INFINITY,
            hi,
            &spec,
        )
        .unwrap();
        (mass, mean)
    }

    #[test]
    fn composite_density_normalized_on_grid() {
        for &(a, b) in &[(10.0, 5.0), (4.0, 2.0), (2.5, 1.8)] {
            for &xi in &[0.8, 2.0, 6.0] {
                let p = params(a, b, xi);
                let (mass, mean) = composite_mass_and_mean(&p);
                assert!((mass - 1.0).abs() < 1e-6, "({a},{b},{xi}) mass {mass}");
                let xi2 = xi * xi;
                let want = xi2 * p.a0() / (xi2 + 1.0);
                assert!(
                    (mean - want).abs() < 1e-6 * want,
                    "({a},{b},{xi}) mean {mean}"
                );
            }
        }
    }

    #[test]
    fn gg_sampler_moments_and_histogram() {
        let p = params(10.0, 5.0, 2.0);
        let s = FadingSampler::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000_000usize;
        let h = 0.01;
        let (mut m1, mut m2, mut bin) = (0.0, 0.0, 0usize);
        for _ in 0..n {
            let x = s.gg(&mut rng);
            m1 += x;
            m2 += x * x;
            if (x - 1.0).abs() < h {
                bin += 1;
            }
        }
        let nf = n as f64;
        let mean = m1 / nf;
        let second = m2 / nf;
        let var = second - mean * mean;
        assert!((mean - 1.0).abs() < 3.0 * (var / nf).sqrt(), "{mean}");
        let want2 = (1.0 + 0.1) * (1.0 + 0.2);
        assert!((second - want2).abs() < 0.005 * want2, "{second}");
        let pbin = bin as f64 / nf;
        let spec = QuadratureSpec::precise();
        let exact = integrate(|x| gg_density(x, &p).unwrap(), 1.0 - h, 1.0 + h, &spec).unwrap();
        let se = (exact * (1.0 - exact) / nf).sqrt();
        assert!((pbin - exact).abs() < 3.0 * se, "{pbin} vs {exact}");
        let f1 = gg_density(1.0, &p).unwrap();
        assert!((pbin / (2.0 * h) - f1).abs() < 0.01 * f1);
    }

    #[test]
    fn gg_sampler_ks_distance() {
        let p = params(10.0, 5.0, 2.0);
        let s = FadingSampler::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 10_000_000usize;
        let mut xs: Vec<f64> = (0..n).map(|_| s.gg(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let spec = QuadratureSpec::precise();
        let mut cdf = 0.0;
        let mut prev = 0.0;
        let mut ks: f64 = 0.0;
        for i in 1..=300 {
            let x = 0.01 * i as f64;
            cdf += integrate(|y| gg_density(y, &p).unwrap(), prev, x, &spec).unwrap();
            prev = x;
            let emp = xs.partition_point(|&v| v <= x) as f64 / n as f64;
            ks = ks.max((emp - cdf).abs());
        }
        assert!(ks < 4.0 / (n as f64).sqrt(), "KS {ks}");
    }

    #[test]
    fn pointing_sampler_support_and_mean() {
        let p = params(10.0, 5.0, 2.0);
        let s = FadingSampler::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let g = s.pointing(&mut rng);
            assert!(g > 0.0 && g <= p.a0());
            sum += g;
            sum2 += g * g;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = sum2 / nf - mean * mean;
        assert!((mean - 0.8 * p.a0()).abs() < 3.0 * (var / nf).sqrt());

        let stiff = FsoChannelParams::new(10.0, 5.0, 1e4, p.a0(), p.g_l()).unwrap();
        let s = FadingSampler::new(&stiff);
        let draws: Vec<f64> = (0..10_000).map(|_| s.pointing(&mut rng)).collect();
        let m = draws.iter().sum::<f64>() / 1e4;
        let v = draws.iter().map(|g| (g - m).powi(2)).sum::<f64>() / 1e4;
        assert!(v < 1e-12 * p.a0() * p.a0());
        assert!((m - p.a0()).abs() < 1e-6 * p.a0());
    }

    #[test]
    fn composite_sampler_matches_density_near_half_a0() {
        let p = params(10.0, 5.0, 2.0);
        let s = FadingSampler::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 10_000_000usize;
        let c = p.a0() / 2.0;
        let h = 0.02 * c;
        let mut bin = 0usize;
        for _ in 0..n {
            let (gf, gp) = s.composite(&mut rng);
            if (gf * gp - c).abs() < h {
                bin += 1;
            }
        }
        let spec = QuadratureSpec::default();
        let exact = integrate(|g| composite_density(g, &p).unwrap(), c - h, c + h, &spec).unwrap();
        let pbin = bin as f64 / n as f64;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((pbin - exact).abs() < 3.0 * se, "{pbin} vs {exact}");
    }

    #[test]
    fn composite_sampler_ks_distance() {
        let p = params(10.0, 5.0, 2.0);
        let s = FadingSampler::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let n = 1_000_000usize;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| {
                let (gf, gp) = s.composite(&mut rng);
                gf * gp
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        let spec = QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_subdivisions: 500,
        };
        let top = xs[n - 1];
        let mut cdf = 0.0;
        let mut prev = 0.0;
        let mut ks: f64 = 0.0;
        for i in 1..=100 {
            let x = top * i as f64 / 100.0;
            cdf += integrate(|g| composite_density(g, &p).unwrap(), prev, x, &spec).unwrap();
            prev = x;
            let emp = xs.partition_point(|&v| v <= x) as f64 / n as f64;
            ks = ks.max((emp - cdf).abs());
        }
        assert!(ks < 1.95 * 2.0 / (n as f64).sqrt(), "KS {ks}");
    }

    #[test]
    fn big_g_limits_and_monotone() {
        let p = params(10.0, 5.0, 2.0);
        let spec = QuadratureSpec::precise();
        assert_eq!(big_g(0.0, &p, &spec).unwrap(), 1.0);
        assert!(big_g(1e6, &p, &spec).unwrap() < 1e-10);
        assert_eq!(big_g(f64::INFINITY, &p, &spec).unwrap(), 0.0);
        assert!(big_g(-1.0, &p, &spec).is_err());
        let mut prev = 1.0;
        for i in 0..=56 {
            let a = 10f64.powf(-12.0 + 0.25 * i as f64);
            let g = big_g_pair(a, &p, &spec).unwrap();
            assert!(g.value <= prev, "A = {a}");
            assert!((g.value + g.complement - 1.0).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&g.value));
            prev = g.value;
        }
    }

    #[test]
    fn big_g_against_sampling() {
        let p = params(10.0, 5.0, 2.0);
        let s = FadingSampler::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let n = 10_000_000usize;
        let a = 1e-6;
        let (mut m, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let (gf, gp) = s.composite(&mut rng);
            let g = gf * gp;
            let c = -(-a / (g * g)).exp_m1();
            m += c;
            m2 += c * c;
        }
        let nf = n as f64;
        let mean = m / nf;
        let se = ((m2 / nf - mean * mean) / nf).sqrt();
        let exact = big_g_pair(a, &p, &QuadratureSpec::precise()).unwrap();
        assert!(
            (exact.complement - mean).abs() < 3.0 * se,
            "{} vs {mean} +- {se}",
            exact.complement
        );
    }

    #[test]
    fn big_g_without_jitter_reduces_to_turbulence_average() {
        let base = params(10.0, 5.0, 2.0);
        let p = FsoChannelParams::new(10.0, 5.0, 1e4, base.a0(), base.g_l()).unwrap();
        let spec = QuadratureSpec::precise();
        for &a in &[1e-8, 1e-6, 1e-5, 1e-4] {
            let g = big_g(a, &p, &spec).unwrap();
            let want = integrate(
                |y| {
                    let z = a / (base.a0() * y).powi(2);
                    (-z).exp() * gg_density(y, &base).unwrap()
                },
                0.0,
                f64::INFINITY,
                &spec,
            )
            .unwrap();
            assert!((g - want).abs() < 1e-4, "A = {a}: {g} vs {want}");
        }
    }

    #[test]
    fn cache_returns_identical_values() {
        let p = params(10.0, 5.0, 2.0);
        let spec = QuadratureSpec::precise();
        let cache = BigGCache::new();
        let a = cache.get(3e-7, &p, &spec).unwrap();
        let b = cache.get(3e-7, &p, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
        assert_eq!(a, big_g_pair(3e-7, &p, &spec).unwrap());
    }
}
