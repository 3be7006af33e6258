//! eval-q, sum, sigma and rh.

use std::time::Instant;

use rayon::prelude::*;
use serde_json::{Map, Value};

use arith::diophantine_sums::{
    closed_form_unit_sum, divisor_pair_sum_bruteforce, enumerate_solutions, weighted_sums, DiophantineInstance,
    EquationKind, UnitWeight, WeightSpec,
};
use arith::divisor_rh::{rh_check, sigma_analytic, sigma_bruteforce, RhMode, SIGMA_TOL_FLOOR};
use arith::indicator_functions::{q_analytic, q_bruteforce, q_general_analytic};
use arith::{Evaluation, Result as ArithResult};

use crate::range::{parse_ints, parse_naturals};
use crate::report::{num, Input, Record, Report};
use crate::{Method, Mode, Settings, SumKind};

/// Evaluates every item on the worker pool; records keep the item order.
pub fn run_items<T: Sync>(s: &Settings, items: &[T], f: impl Fn(&T) -> Record + Sync) -> Vec<Record> {
    s.pool.install(|| {
        items
            .par_iter()
            .map(|item| {
                let start = Instant::now();
                let mut r = f(item);
                r.ms = if s.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
                r
            })
            .collect()
    })
}

/// Copies value, estimate, terms and guard flags from an evaluation, or the
/// error text.
fn fill(r: &mut Record, e: ArithResult<Evaluation>, scale: f64) {
    match e {
        Ok(e) => {
            r.value = Some(scale * e.value);
            r.error_estimate = Some(scale * e.error_estimate);
            r.terms = e.terms_used;
            if e.guards_engaged {
                r.guards.push("overflow");
            }
        }
        Err(err) => r.error = Some(err.to_string()),
    }
}

fn report(config: Map<String, Value>, records: Vec<Record>) -> Report {
    Report { config, records, extra_summary: Map::new() }
}

pub fn eval_q(s: &Settings, config: Map<String, Value>, k: &str, sv: &str, n: &str) -> Result<Report, String> {
    let ks = parse_naturals(k, "k")?;
    let ss = parse_naturals(sv, "s")?;
    let ns = parse_ints(n)?;
    if let Some(bad) = ns.iter().find(|&&n| n < 1) {
        return Err(format!("N must be at least 1 for classification, got {bad}"));
    }
    if let Some(bad) = ss.iter().find(|&&s| s > 16) {
        return Err(format!("s must be at most 16, got {bad}"));
    }
    let mut items = Vec::new();
    for &k in &ks {
        for &sp in &ss {
            for &n in &ns {
                for &t in &s.ts {
                    items.push((k, sp as u32, n, t));
                }
            }
        }
    }
    let records = run_items(s, &items, |&(k, sp, n, t)| {
        let mut r = Record::new(vec![
            ("k", Input::Int(k as i64)),
            ("s", Input::Int(sp as i64)),
            ("N", Input::Int(n)),
            ("t", Input::Real(t)),
        ]);
        let n2 = (n as f64) * (n as f64);
        // accuracy `tol` on N²·q/N², i.e. on the classification scale
        let policy = s.policy((s.tol / n2).max(1e-15));
        let e = if sp == 1 { q_analytic(k, n, t, &policy) } else { q_general_analytic(k, sp, n, t, &policy) };
        fill(&mut r, e, n2);
        let want = q_bruteforce(k, sp, n);
        r.oracle = Some(want as f64);
        r.tolerance = s.tol;
        if let Some(v) = r.value {
            let class = if v >= 0.5 { 1 } else { 0 };
            r.check_failed = class != want || (v - class as f64).abs() >= 0.25;
        }
        r
    });
    let misclassified = records.iter().filter(|r| r.check_failed).count();
    let mut rep = report(config, records);
    rep.extra_summary.insert("misclassified".into(), Value::from(misclassified));
    Ok(rep)
}

pub struct SumArgs<'a> {
    pub kind: SumKind,
    pub d: &'a str,
    pub k: &'a str,
    pub n: &'a str,
    pub weight: &'a str,
    pub method: Option<Method>,
    pub b_horizon: u64,
}

pub fn sum(s: &Settings, config: Map<String, Value>, a: &SumArgs) -> Result<Report, String> {
    let g = WeightSpec::preset(a.weight).ok_or(format!(
        "unknown weight {:?}; expected unit, alternating, reciprocal, geometric or zero",
        a.weight
    ))?;
    let ns = parse_naturals(a.n, "N")?;
    let unit = match a.weight {
        "unit" | "one" => Some(UnitWeight::One),
        "alternating" => Some(UnitWeight::Alternating),
        _ => None,
    };
    if a.kind == SumKind::DivisorPairs {
        if a.d != "1" || a.k != "1" {
            return Err("divisor-pairs takes no --d or --k".into());
        }
        if a.method == Some(Method::Closed) {
            return Err("divisor-pairs is evaluated grouped only".into());
        }
        let items: Vec<(u64, f64)> = ns.iter().flat_map(|&n| s.ts.iter().map(move |&t| (n, t))).collect();
        let records = run_items(s, &items, |&(n, t)| {
            let mut r = Record::new(vec![("N", Input::Int(n as i64)), ("t", Input::Real(t))]);
            let e = DiophantineInstance::new(4 * n, 1, 1, EquationKind::Difference)
                .and_then(|inst| weighted_sums(&inst, &[&g], t, &s.policy(s.tol)))
                .map(|mut v| v.remove(0));
            fill(&mut r, e, 1.0);
            r.oracle = Some(divisor_pair_sum_bruteforce(&g, n));
            r.tolerance = s.tol;
            r
        });
        return Ok(report(config, records));
    }

    let method = a.method.unwrap_or(if unit.is_some() { Method::Closed } else { Method::Grouped });
    if method == Method::Closed && unit.is_none() {
        return Err(format!("the closed method supports the unit and alternating weights, not {:?}", a.weight));
    }
    let kind = match a.kind {
        SumKind::Squares => EquationKind::Sum,
        _ => EquationKind::Difference,
    };
    if a.b_horizon == 0 {
        return Err("b-horizon must be at least 1".into());
    }
    let ds = parse_naturals(a.d, "d")?;
    let ks = parse_naturals(a.k, "k")?;
    let mut items = Vec::new();
    for &d in &ds {
        for &k in &ks {
            for &n in &ns {
                for &t in &s.ts {
                    items.push((d, k, n, t));
                }
            }
        }
    }
    let records = run_items(s, &items, |&(d, k, n, t)| {
        let mut inputs =
            vec![("d", Input::Int(d as i64)), ("k", Input::Int(k as i64)), ("N", Input::Int(n as i64)), ("t", Input::Real(t))];
        if kind == EquationKind::Difference {
            inputs.push(("b_horizon", Input::Int(a.b_horizon as i64)));
        }
        let mut r = Record::new(inputs);
        r.tolerance = s.tol;
        let inst = match DiophantineInstance::new(n, d, k, kind) {
            Ok(i) => i,
            Err(e) => {
                r.error = Some(e.to_string());
                return r;
            }
        };
        let policy = s.policy(s.tol);
        let e = match (method, unit) {
            (Method::Closed, Some(w)) => closed_form_unit_sum(&inst, w, t, &policy),
            _ => weighted_sums(&inst, &[&g], t, &policy).map(|mut v| v.remove(0)),
        };
        fill(&mut r, e, 1.0);
        match enumerate_solutions(&inst, a.b_horizon) {
            Ok(list) => {
                // the analytic sums carry the 1/k² of q_k
                let k2 = (k * k) as f64;
                let raw: f64 = list.pairs.iter().map(|&(a, b)| g.at(a) / (b as f64).powi(4)).sum();
                r.oracle = Some(0.0 + raw / k2);
                r.oracle_tail = g.bound * list.tail_bound / k2;
            }
            Err(e) => r.error = Some(e.to_string()),
        }
        r
    });
    Ok(report(config, records))
}

pub fn sigma(s: &Settings, config: Map<String, Value>, n: &str) -> Result<Report, String> {
    let ns = parse_naturals(n, "N")?;
    let items: Vec<(u64, f64)> = ns.iter().flat_map(|&n| s.ts.iter().map(move |&t| (n, t))).collect();
    let records = run_items(s, &items, |&(n, t)| {
        let mut r = Record::new(vec![("N", Input::Int(n as i64)), ("t", Input::Real(t))]);
        fill(&mut r, sigma_analytic(n, t, &s.policy(s.tol)), 1.0);
        let exact = sigma_bruteforce(n) as f64;
        r.oracle = Some(exact);
        r.tolerance = s.tol.max(SIGMA_TOL_FLOOR);
        r.check_failed = r.value.is_some_and(|v| v.round() != exact);
        r
    });
    Ok(report(config, records))
}

pub fn rh(s: &Settings, config: Map<String, Value>, from: u64, to: u64, mode: Mode) -> Result<Report, String> {
    if from < 2 {
        return Err(format!("--from must be at least 2, got {from}"));
    }
    if from > to {
        return Err(format!("empty range {from}..{to}"));
    }
    if to - from >= 10_000_000 {
        return Err("range has more than 10^7 items".into());
    }
    let mode = match mode {
        Mode::Analytic => RhMode::Analytic,
        Mode::Exact => RhMode::Exact,
    };
    let items: Vec<(u64, f64)> = (from..=to).flat_map(|n| s.ts.iter().map(move |&t| (n, t))).collect();
    let records = run_items(s, &items, |&(n, t)| {
        let mut r = Record::new(vec![("N", Input::Int(n as i64)), ("t", Input::Real(t))]);
        r.tolerance = match mode {
            RhMode::Analytic => s.tol.max(SIGMA_TOL_FLOOR),
            RhMode::Exact => s.tol,
        };
        match rh_check(n, t, mode, &s.policy(s.tol)) {
            Ok(rec) => {
                r.value = Some(rec.margin);
                r.oracle = Some(rec.lagarias_rhs - rec.sigma_exact as f64);
                r.error_estimate = Some(rec.evaluation.as_ref().map_or(0.0, |e| e.error_estimate));
                if let Some(e) = &rec.evaluation {
                    r.terms = e.terms_used.clone();
                    if e.guards_engaged {
                        r.guards.push("overflow");
                    }
                }
                let rounding_ok = rec.sigma_analytic.is_none_or(|v| v.round() == rec.sigma_exact as f64);
                r.check_failed = !(rec.margin > 0.0) || !rounding_ok;
                r.extras = vec![
                    ("sigma", Some(rec.sigma_analytic.unwrap_or(rec.sigma_exact as f64))),
                    ("sigma_exact", Some(rec.sigma_exact as f64)),
                    ("lagarias_rhs", Some(rec.lagarias_rhs)),
                    ("robin_rhs", rec.robin_rhs),
                    ("harmonic", Some(rec.harmonic)),
                ];
            }
            Err(e) => {
                r.error = Some(e.to_string());
                r.extras = ["sigma", "sigma_exact", "lagarias_rhs", "robin_rhs", "harmonic"].map(|k| (k, None)).to_vec();
            }
        }
        r
    });
    let min_margin = records.iter().filter_map(|r| r.value).fold(f64::INFINITY, f64::min);
    let mut rep = report(config, records);
    rep.extra_summary.insert("min_margin".into(), num(min_margin));
    Ok(rep)
}
