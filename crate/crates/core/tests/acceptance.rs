use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nomafso::analytic::Analytic;
use nomafso::channel::{big_g, composite_density, gg_density, BigGCache, FsoChannelParams};
use nomafso::montecarlo::{estimate_big_g, McSettings, OutageEstimate};
use nomafso::specfun::{integrate, QuadratureSpec};
use nomafso::sweep::{
    agree, figure_preset, run_figure, run_sweep, write_csv, Mode, PointResult, SweepAxis, SweepSpec,
};
use nomafso::system::{derive, ScenarioConfig, ThresholdSet};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn z(a: f64, e: &OutageEstimate) -> f64 {
    (a - e.value).abs() / e.resolved_std_err()
}

fn thr(g1: f64, g2: f64) -> ThresholdSet {
    ThresholdSet {
        gamma1: g1,
        gamma2: g2,
        gamma_sum: 1.0,
    }
}

fn analytic_rows(points: &[PointResult]) -> Vec<(f64, nomafso::analytic::OutageBreakdown)> {
    points
        .iter()
        .map(|p| (p.axis_value, p.analytic.clone().unwrap().unwrap()))
        .collect()
}

fn fig1_oracle() -> Outcome {
    let fig = figure_preset("fig1").unwrap();
    let cache = BigGCache::new();
    let spec = SweepSpec::new(SweepAxis::TotalPowerDbm, 0.0, 60.0, 7, Mode::Both);
    let (mut n, mut worst, mut bad) = (0, 0.0f64, Vec::new());
    for s in &fig.series {
        for p in run_sweep(&s.label, &s.config, &spec, None, &cache).unwrap() {
            let a = p.analytic.as_ref().unwrap().as_ref().unwrap();
            let m = p.montecarlo.as_ref().unwrap().as_ref().unwrap();
            for (name, av, e) in [("u1", a.p_out_u1, &m.out_u1), ("u2", a.p_out_u2, &m.out_u2)] {
                n += 1;
                worst = worst.max(z(av, e));
                if !agree(av, e) {
                    bad.push(format!("{} P={} {name}", s.label, p.axis_value));
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{n} comparisons at n=1e6, max |z| {worst:.2}; failing: {bad:?}"),
    )
}

fn fig4_sum_oracle() -> Outcome {
    let fig = figure_preset("fig4").unwrap();
    let cache = BigGCache::new();
    let pts = run_figure(&fig, Mode::Both, None, None, &cache).unwrap();
    let (mut worst, mut bad) = (0.0f64, Vec::new());
    for p in &pts {
        let a = p.analytic.as_ref().unwrap().as_ref().unwrap();
        let m = p.montecarlo.as_ref().unwrap().as_ref().unwrap();
        worst = worst.max(z(a.p_out_sum, &m.out_sum));
        if !agree(a.p_out_sum, &m.out_sum) {
            bad.push(format!("{} s={}", p.series, p.axis_value));
        }
    }
    let has_zero = pts.iter().any(|p| p.axis_value == 0.0);
    outcome(
        bad.is_empty() && has_zero,
        format!(
            "{} points incl. s=0, max |z| {worst:.2}; failing: {bad:?}",
            pts.len()
        ),
    )
}

fn big_g_cross_check() -> Outcome {
    let cfg = &figure_preset("fig1").unwrap().series[0].config;
    let fso = derive(&cfg.scenario).unwrap().fso;
    let spec = QuadratureSpec::precise();
    let settings = McSettings::new(10_000_000, 1);
    let (mut worst, mut bad, mut prev, mut monotone) = (0.0f64, Vec::new(), 1.0, true);
    for i in 0..20 {
        let a = 10f64.powf(-12.0 + 10.0 * i as f64 / 19.0);
        let g = big_g(a, &fso, &spec).unwrap();
        let e = estimate_big_g(a, &fso, &settings).unwrap();
        worst = worst.max(z(g, &e));
        if !agree(g, &e) {
            bad.push(format!("A={a:e}"));
        }
        monotone &= g <= prev;
        prev = g;
    }
    let at_zero = big_g(0.0, &fso, &spec).unwrap();
    outcome(
        bad.is_empty() && monotone && at_zero == 1.0,
        format!(
            "20 points at n=1e7, max |z| {worst:.2}, G(0)={at_zero}, monotone={monotone}; failing: {bad:?}"
        ),
    )
}

fn normalization() -> Outcome {
    let a0 = derive(&figure_preset("fig1").unwrap().series[0].config.scenario)
        .unwrap()
        .a0;
    let spec = QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-9,
        max_subdivisions: 1000,
    };
    let mut worst = 0.0f64;
    for &(al, be) in &[(10.0, 5.0), (4.0, 2.0), (2.5, 1.8)] {
        for &xi in &[0.8, 2.0, 6.0] {
            let p = FsoChannelParams::new(al, be, xi, a0, 0.0126).unwrap();
            let hi = p.a0().ln() + p.sigma_max();
            let mass = integrate(
                |v| {
                    let g = v.exp();
                    if g == 0.0 {
                        0.0
                    } else {
                        composite_density(g, &p).unwrap() * g
                    }
                },
                f64::NEG_INFINITY,
                hi,
                &spec,
            )
            .unwrap();
            worst = worst.max((mass - 1.0).abs());
        }
    }
    let p = FsoChannelParams::new(10.0, 5.0, 2.0, a0, 0.0126).unwrap();
    let precise = QuadratureSpec::precise();
    let mean = integrate(
        |x| x * gg_density(x, &p).unwrap(),
        0.0,
        f64::INFINITY,
        &precise,
    )
    .unwrap();
    let mean_err = (mean - 1.0).abs();
    outcome(
        worst <= 1e-6 && mean_err <= 1e-8,
        format!("max |mass-1| {worst:.1e} over 9 grid points, |E[h]-1| {mean_err:.1e}"),
    )
}

fn fig1_scenarios() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for p in [0.0, 20.0, 40.0, 60.0] {
        for s in [0.0, 10.0, 25.0] {
            out.push(ScenarioConfig::new(p, s, 2e-7, 1e-7));
        }
    }
    out
}

fn branch_continuity() -> Outcome {
    let cache = BigGCache::new();
    let mut worst = 0.0f64;
    for sc in fig1_scenarios() {
        let d = derive(&sc).unwrap();
        let a = Analytic::new(&d, &cache);
        let below = thr(1.0 - 1e-6, 1.0 - 1e-6);
        let at = thr(1.0, 1.0);
        let d1 = a.joint_below_u1(&below).unwrap() - a.joint_below_u1(&at).unwrap();
        let d2 = a.joint_below_u2(&below).unwrap() - a.joint_below_u2(&at).unwrap();
        worst = worst.max(d1.abs()).max(d2.abs());
    }
    outcome(
        worst <= 1e-6,
        format!("max jump {worst:.2e} over 12 (P, s) points, both users"),
    )
}

fn decomposition() -> Outcome {
    let cache = BigGCache::new();
    let mut worst = 0.0f64;
    for sc in fig1_scenarios() {
        let d = derive(&sc).unwrap();
        let a = Analytic::new(&d, &cache);
        for g in [0.2, 0.8, 1.0, 1.5, 4.0] {
            let t = thr(g, g);
            let u1 = a.joint_below_u1(&t).unwrap() + a.joint_above_u1_pi1(&t).unwrap();
            let u2 = a.joint_below_u2(&t).unwrap() + a.joint_above_u2_pi2(&t).unwrap();
            worst = worst.max((u1 - d.p_pi1).abs()).max((u2 - d.p_pi2).abs());
        }
    }
    outcome(
        worst <= 1e-7,
        format!("max |below + above - P(order)| {worst:.2e}"),
    )
}

fn ordering_across_s() -> Outcome {
    let cache = BigGCache::new();
    let t = thr(0.8, 0.4);
    let mut u1 = Vec::new();
    let mut u2 = Vec::new();
    for s in [0.0, 10.0, 25.0] {
        let d = derive(&ScenarioConfig::new(30.0, s, 2e-7, 1e-7)).unwrap();
        let a = Analytic::new(&d, &cache);
        u1.push(a.outage_user1(&t).unwrap());
        u2.push(a.outage_user2(&t).unwrap());
    }
    let pass = u1[0] > u1[1] && u1[1] > u1[2] && u2[0] < u2[1] && u2[1] < u2[2];
    outcome(
        pass,
        format!("P=30 dBm, s=0/10/25: u1 {u1:.5?}, u2 {u2:.5?}"),
    )
}

fn saturation() -> Outcome {
    let fig = figure_preset("fig2").unwrap();
    let s = fig
        .series
        .iter()
        .find(|s| s.config.thresholds.gamma1 == 3.0 && s.config.thresholds.gamma2 == 2.0)
        .unwrap();
    let cache = BigGCache::new();
    let spec = SweepSpec::new(SweepAxis::TotalPowerDbm, 55.0, 60.0, 2, Mode::Analytic);
    let rows = analytic_rows(&run_sweep(&s.label, &s.config, &spec, None, &cache).unwrap());
    let d1 = (rows[0].1.p_out_u1 - rows[1].1.p_out_u1).abs();
    let d2 = (rows[0].1.p_out_u2 - rows[1].1.p_out_u2).abs();
    outcome(
        d1 <= 1e-3 && d2 <= 1e-3,
        format!("|P_out(55) - P_out(60)|: u1 {d1:.2e}, u2 {d2:.2e}"),
    )
}

/// First power at which the curve drops through `level`, interpolated in
/// log-outage between grid points.
fn crossing(rows: &[(f64, f64)], level: f64) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let ((p0, y0), (p1, y1)) = (w[0], w[1]);
        (y0 >= level && y1 < level).then(|| {
            let t = (y0.ln() - level.ln()) / (y0.ln() - y1.ln());
            p0 + t * (p1 - p0)
        })
    })
}

fn interference_gap() -> Outcome {
    let fig = figure_preset("fig3").unwrap();
    let cache = BigGCache::new();
    let mut at = Vec::new();
    for k in [0.1, 1.0] {
        let s = fig
            .series
            .iter()
            .find(|s| s.config.scenario.interference.k_i_factor == k)
            .unwrap();
        let mut spec = s.sweep;
        spec.mode = Mode::Analytic;
        let rows: Vec<(f64, f64)> =
            analytic_rows(&run_sweep(&s.label, &s.config, &spec, None, &cache).unwrap())
                .into_iter()
                .map(|(p, b)| (p, b.p_out_u1))
                .collect();
        at.push(crossing(&rows, 1e-3));
    }
    match (at[0], at[1]) {
        (Some(a), Some(b)) => {
            let gap = b - a;
            outcome(
                (gap - 4.0).abs() <= 1.0,
                format!(
                    "1e-3 crossings: K_I=0.1 at {a:.2} dBm, K_I=1 at {b:.2} dBm, gap {gap:.2} dB"
                ),
            )
        }
        _ => outcome(false, format!("no 1e-3 crossing found: {at:?}")),
    }
}

/// Local minima after merging neighbours that differ by no more than `tol`.
fn local_minima(v: &[f64], tol: f64) -> usize {
    let mut m: Vec<f64> = Vec::new();
    for &x in v {
        match m.last() {
            Some(&l) if (x - l).abs() <= tol => {}
            _ => m.push(x),
        }
    }
    (0..m.len())
        .filter(|&i| {
            let left = i == 0 || m[i] < m[i - 1];
            let right = i + 1 == m.len() || m[i] < m[i + 1];
            left && right
        })
        .count()
}

fn unique_backoff_minimum() -> Outcome {
    let fig = figure_preset("fig4").unwrap();
    let cache = BigGCache::new();
    let mut found = Vec::new();
    for s in &fig.series {
        let mut spec = s.sweep;
        spec.mode = Mode::Analytic;
        let rows = analytic_rows(&run_sweep(&s.label, &s.config, &spec, None, &cache).unwrap());
        let v: Vec<f64> = rows.iter().map(|r| r.1.p_out_sum).collect();
        let argmin = rows
            .iter()
            .min_by(|a, b| a.1.p_out_sum.total_cmp(&b.1.p_out_sum))
            .unwrap()
            .0;
        found.push((s.label.clone(), local_minima(&v, 1e-12), argmin));
    }
    outcome(
        found.iter().all(|f| f.1 == 1),
        format!("(series, minima, s*): {found:?}"),
    )
}

fn mirror_symmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cache = BigGCache::new();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let l2 = 10f64.powf(rng.random_range(-8.0..-6.0));
        let l1 = l2 * rng.random_range(1.0..20.0);
        let mut sc = ScenarioConfig::new(
            rng.random_range(0.0..60.0),
            rng.random_range(0.0..30.0),
            l1,
            l2,
        );
        sc.interference.k_i_factor = rng.random_range(0.0..10.0);
        sc.fso.xi = rng.random_range(0.8..6.0);
        let (g1, g2) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let d = derive(&sc).unwrap();
        let m = d.mirrored();
        let lhs = Analytic::new(&d, &cache)
            .outage_user2(&thr(g1, g2))
            .unwrap();
        let rhs = Analytic::new(&m, &cache)
            .outage_user1(&thr(g2, g1))
            .unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    outcome(
        worst <= 1e-12,
        format!("50 random configs, max difference {worst:.1e}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let fig = figure_preset("fig1").unwrap();
    let mut files = Vec::new();
    for workers in [Some(1), Some(3)] {
        let cache = BigGCache::new();
        let pts = run_figure(&fig, Mode::Both, None, workers, &cache).unwrap();
        let path = dir.path().join(format!("fig1_{}.csv", workers.unwrap()));
        write_csv(&path, SweepAxis::TotalPowerDbm.name(), &pts).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    let rows = files[0].iter().filter(|&&b| b == b'\n').count() - 1;
    outcome(
        files[0] == files[1],
        format!(
            "fig1 both modes with 1 and 3 workers: {rows} rows each, identical={}",
            files[0] == files[1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("1", fig1_oracle),
        ("2", fig4_sum_oracle),
        ("3", big_g_cross_check),
        ("4", normalization),
        ("5", branch_continuity),
        ("6", decomposition),
        ("7a", ordering_across_s),
        ("7b", saturation),
        ("7c", interference_gap),
        ("7d", unique_backoff_minimum),
        ("8", mirror_symmetry),
        ("9", determinism),
    ];
    let mut failed = 0;
    for (id, f) in criteria {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:<3} {tag}  {}  ({:.1}s)",
            o.detail,
            t.elapsed().as_secs_f64()
        );
        failed += !o.pass as usize;
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
