//! Verification suites. Each check is one record: `value` is what the
//! library computes, `oracle` what it is compared with, `error_estimate` the
//! allowance for truncated oracles (tail bounds) or evaluation estimates,
//! and `tolerance` the pinned threshold on top.

use std::f64::consts::PI;

use clap::ValueEnum;
use num_complex::Complex64;
use serde_json::{Map, Value};

use arith::closed_form_integrals::{
    alternating_inverse_square, alternating_inverse_square_squared, alternating_odd, closed_form, quadrature_oracle,
    IntegralKind,
};
use arith::divisor_rh::{sigma_analytic, sigma_decomposition_check};
use arith::hyperbolic_kernels::{half_plane_root, kernel_g, kernel_t, kernel_v, mittag_leffler_residual};
use arith::indicator_functions::{
    q_analytic, q_bruteforce, q_general_analytic, q_shifted_analytic, zero_identity_residual,
};
use arith::series_engine::{
    invert_series, beta_identity_residual, self_consistency_residual, FiniteSeries, SeriesEvaluator, SquareIndicatorSeries,
};
use arith::{Evaluation, TruncationPolicy};

use crate::commands::run_items;
use crate::report::{num, Input, Record, Report};
use crate::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Kernels,
    Integrals,
    Inversion,
    Zero,
    Consistency,
    Decomposition,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernels => "kernels",
            Suite::Integrals => "integrals",
            Suite::Inversion => "inversion",
            Suite::Zero => "zero",
            Suite::Consistency => "consistency",
            Suite::Decomposition => "decomposition",
            Suite::All => "all",
        }
    }
}

const SUITES: [Suite; 6] =
    [Suite::Kernels, Suite::Integrals, Suite::Inversion, Suite::Zero, Suite::Consistency, Suite::Decomposition];

type Check = Box<dyn Fn(&TruncationPolicy) -> Record + Send + Sync>;

fn record(suite: Suite, label: String, value: f64, oracle: f64, estimate: f64, tolerance: f64) -> Record {
    let mut r = Record::new(vec![("suite", Input::Text(suite.name().into())), ("check", Input::Text(label))]);
    r.value = Some(value);
    r.oracle = Some(oracle);
    r.error_estimate = Some(estimate);
    r.tolerance = tolerance;
    r
}

fn failed(suite: Suite, label: String, err: arith::Error) -> Record {
    let mut r = Record::new(vec![("suite", Input::Text(suite.name().into())), ("check", Input::Text(label))]);
    r.error = Some(err.to_string());
    r
}

/// Two evaluations of one quantity, compared within their combined estimates.
fn pair(suite: Suite, label: String, a: arith::Result<Evaluation>, b: arith::Result<Evaluation>, scale: f64) -> Record {
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let mut r = record(
                suite,
                label,
                scale * a.value,
                scale * b.value,
                scale * (a.error_estimate + b.error_estimate),
                1e-12,
            );
            r.terms = a.terms_used;
            r
        }
        (Err(e), _) | (_, Err(e)) => failed(suite, label, e),
    }
}

/// max that keeps NaN, so a broken evaluation cannot pass as small.
fn worse(a: f64, b: f64) -> f64 {
    if b.is_nan() || b > a {
        b
    } else {
        a
    }
}

fn g_oracle(m: f64, t: f64, k: u64) -> f64 {
    let z = Complex64::new(m, t);
    let w = z.sqrt() * PI / (k as f64).sqrt();
    -2.0 * (w.cosh() / w.sinh() * z.powf(-2.5)).im
}

fn kernels() -> Vec<Check> {
    let s = Suite::Kernels;
    let mut v: Vec<Check> = vec![Box::new(move |_| {
        let mut worst = 0.0f64;
        for m in [-1e6, -50.0, -1.0, 0.0, 0.3, 7.0, 1e6] {
            for t in [1e-3, 0.5, 1.0, 1e3] {
                let r = half_plane_root(m, t).expect("valid grid");
                worst = worse(worst, (r.u * r.u - r.v * r.v - m).abs() / m.hypot(t));
                worst = worse(worst, (2.0 * r.u * r.v - t).abs() / t);
            }
        }
        record(s, "root u²−v²=M, 2uv=t (relative)".into(), worst, 0.0, 0.0, 1e-12)
    })];
    for x in [0.0, 1.0, 2.5, -2.5, -4.0] {
        for z in [0.5, 1.0, 3.0] {
            v.push(Box::new(move |_| {
                // past n² = 2|x| the terms are below 4/n⁴
                let n = 4000usize;
                let direct: f64 = (1..=n).map(|j| 1.0 / (z * z + (x + (j * j) as f64).powi(2))).sum();
                let label = format!("T lattice sum x={x} z={z}");
                match kernel_t(x, z) {
                    Ok(kv) => {
                        let closed = PI / 4.0 * kv.value - 0.5 / (x * x + z * z);
                        record(s, label, closed, direct, 4.0 / (3.0 * (n as f64).powi(3)), 1e-10)
                    }
                    Err(e) => failed(s, label, e),
                }
            }));
            v.push(Box::new(move |_| {
                let n = 4000usize;
                let term = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 } / (z * z + (x + (j * j) as f64).powi(2));
                let direct: f64 = (1..=n).map(term).sum();
                let label = format!("V lattice sum x={x} z={z}");
                match kernel_v(x, z) {
                    Ok(kv) => {
                        let closed = PI / 2.0 * kv.value - 0.5 / (x * x + z * z);
                        record(s, label, closed, direct, term(n + 1).abs(), 1e-10)
                    }
                    Err(e) => failed(s, label, e),
                }
            }));
        }
    }
    for (name, theta) in [("0", 0.0), ("pi/3", PI / 3.0), ("pi/2", PI / 2.0), ("pi", PI)] {
        for x in [0.5, 1.0, 2.0] {
            v.push(Box::new(move |_| {
                let label = format!("coth expansion theta={name} x={x}");
                if theta == PI {
                    // one-signed tail Σ_{k>n} 1/(k²+x²), estimated by the
                    // midpoint integral to O(n^{-3})
                    let n = 1000usize;
                    let mid = (PI / 2.0 - ((n as f64 + 0.5) / x).atan()) / x;
                    match mittag_leffler_residual(theta, x, n) {
                        Ok(r) => record(s, label, r, mid, 1.0 / (n as f64).powi(3), 1e-12),
                        Err(e) => failed(s, label, e),
                    }
                } else {
                    let n = 100_000usize;
                    let nf = n as f64 + 1.0;
                    let bound = 1.0 / ((theta / 2.0).cos() * (nf * nf + x * x));
                    match mittag_leffler_residual(theta, x, n) {
                        Ok(r) => record(s, label, r, 0.0, bound, 1e-12),
                        Err(e) => failed(s, label, e),
                    }
                }
            }));
        }
    }
    for t in [0.5, 1.0, 2.0] {
        for k in [1u64, 2, 3] {
            v.push(Box::new(move |_| {
                let mut worst = 0.0f64;
                for m in -50..=50 {
                    let m = m as f64;
                    let g = kernel_g(m, t, k).map_or(f64::NAN, |g| g.value);
                    worst = worse(worst, (g - g_oracle(m, t, k)).abs());
                }
                record(s, format!("G vs complex coth, M in [-50, 50], t={t} k={k}"), worst, 0.0, 0.0, 1e-10)
            }));
        }
    }
    v.push(Box::new(move |_| {
        let (mut bad, mut guarded) = (0, false);
        for m in [-1e6, -1e3, 0.0, 1e3, 1e6] {
            for t in [1e-3, 1.0, 1e3] {
                let vals = [kernel_t(m, t), kernel_v(m, t), kernel_g(m, t, 1), kernel_g(m, t, 3)];
                for kv in vals {
                    match kv {
                        Ok(kv) => {
                            bad += !kv.value.is_finite() as usize;
                            guarded |= kv.overflow_guarded;
                        }
                        Err(_) => bad += 1,
                    }
                }
            }
        }
        let mut r = record(s, "non-finite kernel outputs, |M| <= 1e6".into(), bad as f64, 0.0, 0.0, 0.0);
        if guarded {
            r.guards.push("overflow");
        }
        r
    }));
    v
}

fn integrals() -> Vec<Check> {
    let s = Suite::Integrals;
    let mut v: Vec<Check> = Vec::new();
    for (kname, kind) in [("I", IntegralKind::I), ("K", IntegralKind::K), ("J", IntegralKind::J)] {
        for t in [0.5, 1.0, 2.0] {
            v.push(Box::new(move |_| {
                let label = format!("{kname} closed form vs quadrature, q in [-10, 10], t={t}");
                let mut worst = 0.0f64;
                for q in -10..=10 {
                    match (closed_form(kind, q, t), quadrature_oracle(kind, q, t, 1e-12)) {
                        (Ok(c), Ok(o)) => worst = worse(worst, (c.value - o).abs()),
                        (Err(e), _) | (_, Err(e)) => return failed(s, label, e),
                    }
                }
                record(s, label, worst, 0.0, 0.0, 1e-9)
            }));
        }
    }
    v.push(Box::new(move |_| {
        let mut worst = 0.0f64;
        for t in [0.5, 1.0, 2.0] {
            for q in 1..=10 {
                let f = |kind, q| closed_form(kind, q, t).map_or(f64::NAN, |c| c.value);
                worst = worse(worst, (f(IntegralKind::I, q) + f(IntegralKind::I, -q)).abs());
                worst = worse(worst, (f(IntegralKind::K, q) - f(IntegralKind::K, -q)).abs());
                worst = worse(worst, (f(IntegralKind::J, q) - f(IntegralKind::J, -q)).abs());
            }
        }
        record(s, "parity: I odd, K and J even".into(), worst, 0.0, 0.0, 1e-15)
    }));
    for z in [0.5, 1.0, 2.0] {
        v.push(Box::new(move |_| {
            let n = 100_000usize;
            let (direct, closed) = alternating_inverse_square(z, n);
            let first = 1.0 / ((n as f64 + 1.0).powi(2) + z * z);
            record(s, format!("alternating 1/(r²+z²) z={z}"), closed, direct, first, 1e-12)
        }));
        v.push(Box::new(move |_| {
            let n = 100_000usize;
            let (direct, closed) = alternating_inverse_square_squared(z, n);
            let first = 1.0 / ((n as f64 + 1.0).powi(2) + z * z).powi(2);
            record(s, format!("alternating 1/(r²+z²)² z={z}"), closed, direct, first, 1e-12)
        }));
        v.push(Box::new(move |_| {
            let n = 100_000usize;
            let (direct, closed) = alternating_odd(z, n);
            // midpoint-corrected alternating sum: error of order the second
            // difference of the terms
            let bound = 1.0 / (2.0 * n as f64).powi(2);
            record(s, format!("alternating odd (2r+1)/((2r+1)²+z²) z={z}"), closed, direct, bound, 1e-12)
        }));
    }
    v
}

fn evaluators() -> Vec<(&'static str, Box<dyn SeriesEvaluator + Send>)> {
    vec![
        ("square indicator k=1", Box::new(SquareIndicatorSeries { k: 1 })),
        ("square indicator k=2", Box::new(SquareIndicatorSeries { k: 2 })),
        ("2^-n", Box::new(FiniteSeries::geometric())),
    ]
}

fn inversion() -> Vec<Check> {
    let s = Suite::Inversion;
    let mut v: Vec<Check> = Vec::new();
    for i in 0..evaluators().len() {
        v.push(Box::new(move |p| {
            let (name, f) = evaluators().swap_remove(i);
            let label = format!("recover f(N), N in [-5, 30], {name}");
            let mut worst = 0.0f64;
            let mut terms = 0;
            for n in -5..=30i64 {
                let want = if n > 0 { f.coefficient(n).unwrap_or(0.0) } else { 0.0 };
                match invert_series(f.as_ref(), n, 1.0, p) {
                    Ok(e) => {
                        worst = worse(worst, (e.value - want).abs());
                        terms += e.total_terms();
                    }
                    Err(e) => return failed(s, label, e),
                }
            }
            let mut r = record(s, label, worst, 0.0, 0.0, 1e-6_f64.max(p.abs_tol));
            r.terms.insert("k".into(), terms);
            r
        }));
    }
    let funcs: [(&str, fn(u64) -> f64, usize); 2] = [
        ("2^-n", |n| 0.5f64.powi(n as i32), 60),
        ("q_1(n)/n²", |n| q_bruteforce(1, 1, n as i64) as f64 / (n * n) as f64, 400),
    ];
    for (name, f, n_terms) in funcs {
        v.push(Box::new(move |_| {
            let label = format!("beta identity, beta in [-1, 1], {name}");
            let mut worst = 0.0f64;
            for beta in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                match beta_identity_residual(&f, beta, 1.0, n_terms) {
                    Ok(r) => worst = worse(worst, r),
                    Err(e) => return failed(s, label, e),
                }
            }
            record(s, label, worst, 0.0, 0.0, 1e-6)
        }));
    }
    v
}

fn zero() -> Vec<Check> {
    let s = Suite::Zero;
    let mut v: Vec<Check> = Vec::new();
    for k in [1u64, 2] {
        v.push(Box::new(move |p| {
            let label = format!("q_{k}(N)/N² form at N in [-20, 0]");
            let mut worst = 0.0f64;
            for n in -20..=0 {
                match zero_identity_residual(k, n, 1.0, p) {
                    Ok(r) => worst = worse(worst, r),
                    Err(e) => return failed(s, label, e),
                }
            }
            record(s, label, worst, 0.0, 0.0, 1e-6)
        }));
        v.push(Box::new(move |p| {
            let label = format!("shifted q_{k} form at N+c in [-10, 0], N in {{1, 4, 10, 25}}");
            let mut worst = 0.0f64;
            for n in [1i64, 4, 10, 25] {
                for x in -10..=0 {
                    match q_shifted_analytic(k, n, x - n, 1.0, p) {
                        Ok(e) => worst = worse(worst, e.value.abs()),
                        Err(e) => return failed(s, label, e),
                    }
                }
            }
            record(s, label, worst, 0.0, 0.0, 1e-6)
        }));
    }
    v
}

fn consistency() -> Vec<Check> {
    let s = Suite::Consistency;
    let mut v: Vec<Check> = Vec::new();
    for i in 0..evaluators().len() {
        for t in [0.5, 1.0, 2.0] {
            v.push(Box::new(move |p| {
                let (name, f) = evaluators().swap_remove(i);
                let label = format!("self-consistency {name} t={t}");
                match self_consistency_residual(f.as_ref(), t, p) {
                    Ok(r) => record(s, label, r, 0.0, 0.0, 1e-6),
                    Err(e) => failed(s, label, e),
                }
            }));
        }
    }
    for (k, n, c) in [(1u64, 10i64, -6i64), (1, 10, -1), (1, 10, 3), (1, 10, 6), (1, 10, 15), (2, 5, 3), (2, 5, 13)] {
        v.push(Box::new(move |p| {
            let x = n + c;
            let x2 = (x * x) as f64;
            let label = format!("shifted k={k} N={n} c={c} vs direct N={x} (×N²)");
            pair(s, label, q_shifted_analytic(k, n, c, 1.0, p), q_analytic(k, x, 1.0, p), x2)
        }));
    }
    for n in [10i64, 25, 36] {
        for t in [0.8, 1.5] {
            v.push(Box::new(move |p| {
                let label = format!("q_1 N={n} t={t} vs t=1 (×N²)");
                pair(s, label, q_analytic(1, n, t, p), q_analytic(1, n, 1.0, p), (n * n) as f64)
            }));
        }
    }
    for n in [1i64, 4, 7, 16, 30, 49] {
        v.push(Box::new(move |p| {
            let label = format!("general s=1 vs direct N={n} (×N²)");
            pair(s, label, q_general_analytic(1, 1, n, 1.0, p), q_analytic(1, n, 1.0, p), (n * n) as f64)
        }));
    }
    for n in [6u64, 10, 30] {
        for t in [0.8, 1.25] {
            v.push(Box::new(move |p| {
                let label = format!("sigma N={n} t={t} vs t=1");
                let p = p.with_tol(1e-4);
                pair(s, label, sigma_analytic(n, t, &p), sigma_analytic(n, 1.0, &p), 1.0)
            }));
        }
    }
    v
}

fn decomposition() -> Vec<Check> {
    vec![Box::new(|_| {
        let s = Suite::Decomposition;
        let label = "σ(N) = Σ √squares, N in [1, 10^4]".to_string();
        let mut bad = 0u64;
        for n in 1..=10_000u64 {
            match sigma_decomposition_check(n) {
                Ok(0) => {}
                Ok(_) => bad += 1,
                Err(e) => return failed(s, label, e),
            }
        }
        let mut r = record(s, label, bad as f64, 0.0, 0.0, 0.0);
        r.terms.insert("N".into(), 10_000);
        r
    })]
}

pub fn run(settings: &Settings, config: Map<String, Value>, suite: Suite) -> Report {
    let chosen: Vec<Suite> = if suite == Suite::All { SUITES.to_vec() } else { vec![suite] };
    let mut checks: Vec<Check> = Vec::new();
    for s in &chosen {
        checks.extend(match s {
            Suite::Kernels => kernels(),
            Suite::Integrals => integrals(),
            Suite::Inversion => inversion(),
            Suite::Zero => zero(),
            Suite::Consistency => consistency(),
            Suite::Decomposition => decomposition(),
            Suite::All => unreachable!("expanded above"),
        });
    }
    let policy = settings.policy((settings.tol * 1e-2).max(1e-13));
    let records = run_items(settings, &checks, |c| c(&policy));
    let mut maxima = Map::new();
    for s in &chosen {
        let worst = records
            .iter()
            .filter(|r| matches!(&r.inputs[0].1, Input::Text(n) if n == s.name()))
            .filter_map(Record::diff)
            .fold(0.0, f64::max);
        maxima.insert(s.name().into(), num(worst));
    }
    let mut rep = Report { config, records, extra_summary: Map::new() };
    rep.extra_summary.insert("suite_max_residual".into(), Value::Object(maxima));
    rep
}
