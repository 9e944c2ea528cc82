//! Globally adaptive 21-point Gauss-Kronrod quadrature (QUADPACK QAG style).
//!
//! The interval with the largest error estimate is bisected until the summed
//! error estimate drops below `max(abs_tol, rel_tol * |result|)`. Infinite
//! endpoints are mapped onto [0, 1) with x = lo + t/(1-t) (or its mirror);
//! the Kronrod nodes never touch the endpoints, so the singular end of the
//! map is never evaluated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_629_163,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights, paired with the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 500,
        }
    }
}

impl QuadratureSpec {
    /// Near machine precision; used wherever probabilities are formed as
    /// differences of nearly equal terms.
    pub fn precise() -> Self {
        QuadratureSpec {
            abs_tol: 1e-300,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::invalid(
                "quadrature",
                "abs_tol and rel_tol must be > 0 and max_subdivisions >= 1",
            ));
        }
        Ok(())
    }

    /// Tolerances for an integral nested inside one using `self`.
    pub fn tightened(&self, factor: f64) -> Self {
        QuadratureSpec {
            abs_tol: self.abs_tol / factor,
            rel_tol: self.rel_tol / factor,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn kronrod21<E, F>(f: &mut F, lo: f64, hi: f64) -> std::result::Result<Segment, E>
where
    F: FnMut(f64) -> std::result::Result<f64, E>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center)?;
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    Ok(Segment {
        lo,
        hi,
        value: res_k * half,
        error: rescale_error(err, res_abs, res_asc),
    })
}

enum Mapping {
    Finite,
    UpperInfinite(f64),
    LowerInfinite(f64),
}

impl Mapping {
    fn apply<E>(
        &self,
        f: &mut dyn FnMut(f64) -> std::result::Result<f64, E>,
        t: f64,
    ) -> std::result::Result<f64, E> {
        match *self {
            Mapping::Finite => f(t),
            Mapping::UpperInfinite(lo) => {
                let u = 1.0 - t;
                let y = f(lo + t / u)?;
                Ok(if y == 0.0 { 0.0 } else { y / (u * u) })
            }
            Mapping::LowerInfinite(hi) => {
                let u = 1.0 - t;
                let y = f(hi - t / u)?;
                Ok(if y == 0.0 { 0.0 } else { y / (u * u) })
            }
        }
    }
}

/// Integrate a fallible integrand; errors from `f` abort the integration.
///
/// `lo` may be `-inf` and `hi` may be `+inf`. Deterministic for identical
/// inputs.
pub fn integrate_fallible<F>(mut f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    integrate_dyn(&mut f, lo, hi, spec)
}

fn integrate_dyn(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    if lo.is_nan() || hi.is_nan() || !(lo < hi) {
        return Err(Error::Domain {
            func: "integrate",
            arg: hi,
            expected: "lo < hi",
        });
    }
    if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
        let left = integrate_dyn(f, lo, 0.0, spec)?;
        let right = integrate_dyn(f, 0.0, hi, spec)?;
        return Ok(Estimate {
            value: left.value + right.value,
            error: left.error + right.error,
        });
    }
    let (mapping, a, b) = if hi == f64::INFINITY {
        (Mapping::UpperInfinite(lo), 0.0, 1.0)
    } else if lo == f64::NEG_INFINITY {
        (Mapping::LowerInfinite(hi), 0.0, 1.0)
    } else {
        (Mapping::Finite, lo, hi)
    };
    let mut g = |t: f64| mapping.apply(f, t);

    let first = kronrod21(&mut g, a, b)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    // error carried by segments too narrow to split any further
    let mut frozen_error = 0.0;
    heap.push(first);
    let mut subdivisions = 1;

    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tol {
            return Ok(Estimate { value, error });
        }
        if subdivisions >= spec.max_subdivisions || frozen_error > tol {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        let scale = worst.lo.abs().max(worst.hi.abs()).max(f64::MIN_POSITIVE);
        if worst.hi - worst.lo <= 1e3 * f64::EPSILON * scale {
            frozen_error += worst.error;
            continue;
        }
        let left = kronrod21(&mut g, worst.lo, mid)?;
        let right = kronrod21(&mut g, mid, worst.hi)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }

    Err(Error::NonConvergence {
        estimate: value,
        error_bound: error,
        subdivisions,
    })
}

/// Integrate `f` over `[lo, hi]`; see [`integrate_fallible`].
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_fallible(|x| Ok(f(x)), lo, hi, spec).map(|e| e.value)
}
