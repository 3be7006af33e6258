//! Closed forms for the three integrals over [0, 1]
//!
//! ```text
//! I_q = ∫ sin(πqβ)/(e^{2πβt}+1) dβ
//! K_q = ∫ β cos(πqβ)/(e^{2πβt}+1) dβ
//! J_q = ∫ cos(πqβ)/cosh(πβt) dβ
//! ```
//!
//! each as an elementary constant plus an exponentially convergent series,
//! and an adaptive Gauss–Kronrod oracle for the same integrals.
//!
//! The printed constant for K is only right at t = 1. The version here has
//! `k_q = -1/(2π²q²) + cosh(πq/2t)/(8t² sinh²(πq/2t))` and a leading factor
//! `2t/π` on the first series, and agrees with quadrature for every t.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sum::Neumaier;

/// Default absolute tolerance of the exponential series.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A closed-form integral value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralValue {
    pub value: f64,
    pub series_terms_used: usize,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntegralKind {
    I,
    K,
    J,
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("t must be positive and finite, got {t}"))
    }
}

#[inline]
fn parity(q: i64) -> f64 {
    if q.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `1/sinh(x)` for x > 0 without overflow.
#[inline]
pub(crate) fn csch(x: f64) -> f64 {
    if x > 20.0 {
        let e = (-x).exp();
        2.0 * e / (1.0 - e * e)
    } else {
        1.0 / x.sinh()
    }
}

/// `1/cosh(x)` without overflow.
#[inline]
pub(crate) fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Sums `f(r)` for r = start, start+1, … until `bound(r)` (a bound on the
/// magnitude of term r and everything after it, geometric with ratio ≤ 1/2)
/// drops below `tol / 10`. Returns (sum, terms, tail estimate).
fn exp_series(
    start: u32,
    tol: f64,
    mut f: impl FnMut(f64) -> f64,
    mut bound: impl FnMut(f64) -> f64,
) -> (f64, usize, f64) {
    let mut acc = Neumaier::new();
    let mut r = start;
    let mut terms = 0;
    loop {
        let rf = r as f64;
        let b = bound(rf);
        if b < tol / 10.0 || terms >= 10_000 {
            return (acc.value(), terms, b);
        }
        acc.add(f(rf));
        terms += 1;
        r += 1;
    }
}

/// The constant i_q.
pub fn i_const(q: i64, t: f64) -> f64 {
    if q == 0 {
        return 0.0;
    }
    let qf = q as f64;
    // 1/sinh is odd, so evaluate at |q| and restore the sign.
    let s = qf.signum() * csch(PI * qf.abs() / (2.0 * t));
    1.0 / (2.0 * PI * qf) - s / (4.0 * t)
}

/// The constant k_q.
pub fn k_const(q: i64, t: f64) -> f64 {
    if q == 0 {
        return 1.0 / (48.0 * t * t);
    }
    let qf = (q as f64).abs();
    let a = PI * qf / (2.0 * t);
    // cosh(a)/sinh²(a) = coth(a)·csch(a)
    let cs = csch(a);
    let coth = if a > 20.0 { 1.0 + 2.0 * (-2.0 * a).exp() } else { 1.0 / a.tanh() };
    -1.0 / (2.0 * PI * PI * qf * qf) + coth * cs / (8.0 * t * t)
}

pub fn integral_i(q: i64, t: f64) -> Result<IntegralValue> {
    integral_i_tol(q, t, DEFAULT_TOL)
}

pub fn integral_i_tol(q: i64, t: f64, tol: f64) -> Result<IntegralValue> {
    check_t(t)?;
    if q == 0 {
        return Ok(IntegralValue { value: 0.0, series_terms_used: 0, error_estimate: 0.0 });
    }
    let qf = q as f64;
    let (s, n, tail) = exp_series(
        1,
        tol,
        |r| parity(r as i64 - 1) * (-2.0 * PI * t * r).exp() / (4.0 * t * t * r * r + qf * qf),
        |r| qf.abs() / PI * (-2.0 * PI * t * r).exp() / (4.0 * t * t * r * r + qf * qf),
    );
    Ok(IntegralValue {
        value: i_const(q, t) + parity(q - 1) * qf / PI * s,
        series_terms_used: n,
        error_estimate: tail,
    })
}

pub fn integral_k(q: i64, t: f64) -> Result<IntegralValue> {
    integral_k_tol(q, t, DEFAULT_TOL)
}

pub fn integral_k_tol(q: i64, t: f64, tol: f64) -> Result<IntegralValue> {
    check_t(t)?;
    let q2 = (q as f64) * (q as f64);
    let t2 = t * t;
    let (s, n, tail) = exp_series(
        1,
        tol,
        |r| {
            let e = parity(r as i64 - 1) * (-2.0 * PI * t * r).exp();
            let d = 4.0 * t2 * r * r + q2;
            2.0 * t / PI * r * e / d + e * (4.0 * t2 * r * r - q2) / (PI * PI * d * d)
        },
        |r| {
            let d = 4.0 * t2 * r * r + q2;
            (-2.0 * PI * t * r).exp() * (2.0 * t * r / (PI * d) + 1.0 / (PI * PI * d))
        },
    );
    Ok(IntegralValue {
        value: k_const(q, t) + parity(q - 1) * s,
        series_terms_used: n,
        error_estimate: tail,
    })
}

pub fn integral_j(q: i64, t: f64) -> Result<IntegralValue> {
    integral_j_tol(q, t, DEFAULT_TOL)
}

pub fn integral_j_tol(q: i64, t: f64, tol: f64) -> Result<IntegralValue> {
    check_t(t)?;
    let (c, s, n, tail) = j_parts(q, t, tol);
    Ok(IntegralValue { value: c + parity(q - 1) * s, series_terms_used: n, error_estimate: tail })
}

/// The two pieces of J_q: `1/(2t cosh(πq/2t))` and
/// `(2t/π) Σ_{m≥0} (−1)^m (2m+1) e^{−πt(2m+1)} / (t²(2m+1)² + q²)`,
/// so that `J_q = cosh_part + (−1)^{q−1} series_part`.
pub(crate) fn j_parts(q: i64, t: f64, tol: f64) -> (f64, f64, usize, f64) {
    let q2 = (q as f64) * (q as f64);
    let t2 = t * t;
    let (s, n, tail) = exp_series(
        0,
        tol,
        |m| {
            let o = 2.0 * m + 1.0;
            parity(m as i64) * o * (-PI * t * o).exp() / (t2 * o * o + q2)
        },
        |m| {
            let o = 2.0 * m + 1.0;
            2.0 * t / PI * o * (-PI * t * o).exp() / (t2 * o * o + q2)
        },
    );
    (sech(PI * q as f64 / (2.0 * t)) / (2.0 * t), 2.0 * t / PI * s, n, tail)
}

/// `2·arctan(tanh(πt/2))/(πt)`, the q = 0 value of J.
pub fn j_zero(t: f64) -> f64 {
    2.0 * (PI * t / 2.0).tanh().atan() / (PI * t)
}

/// Bound C with |J_q| ≤ C/q² for every integer q ≠ 0.
pub(crate) fn j_decay_constant(t: f64) -> f64 {
    // q²·sech(πq/2t)/(2t) ≤ (1/t)·max_q q² e^{−πq/2t} = (1/t)(4t/(πe))²
    let c = 4.0 * t / (PI * std::f64::consts::E);
    2.0 * t / PI * sum_weights(t) + c * c / t
}

fn sum_weights(t: f64) -> f64 {
    (0..64)
        .map(|m| {
            let o = 2.0 * m as f64 + 1.0;
            o * (-PI * t * o).exp()
        })
        .sum()
}

/// J_q for q ≥ 0, precomputed up to a length and extended on request.
///
/// The series part is summed to 1e-17 absolute so that the slowly decaying
/// values at large q keep their relative accuracy.
#[derive(Debug, Clone)]
pub struct JTable {
    t: f64,
    values: Vec<f64>,
}

impl JTable {
    pub fn new(t: f64) -> Self {
        let mut table = Self { t, values: vec![j_zero(t)] };
        table.extend_to(64);
        table
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn extend_to(&mut self, q: usize) {
        while self.values.len() <= q {
            let n = self.values.len() as i64;
            let (c, s, _, _) = j_parts(n, self.t, 1e-17);
            self.values.push(c + parity(n - 1) * s);
        }
    }

    /// J_{|q|}; computed on the fly beyond the table.
    #[inline]
    pub fn get(&self, q: i64) -> f64 {
        let a = q.unsigned_abs() as usize;
        match self.values.get(a) {
            Some(&v) => v,
            None => {
                let (c, s, _, _) = j_parts(a as i64, self.t, 1e-17);
                c + parity(a as i64 - 1) * s
            }
        }
    }
}

// 15-point Kronrod nodes/weights and the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration on [a, b] to absolute tolerance `tol`.
pub fn adaptive_gk(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol {
            return Ok(crate::sum::sum(parts.iter().map(|p| p.2)));
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "error estimate {total_err:e} above {tol:e} after {MAX_INTERVALS} subintervals"
            )));
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Direct numerical integration of the defining integrals.
pub fn quadrature_oracle(kind: IntegralKind, q: i64, t: f64, tol: f64) -> Result<f64> {
    check_t(t)?;
    if !(tol >= 1e-12) {
        return domain(format!("quadrature tolerance must be at least 1e-12, got {tol}"));
    }
    let qf = q as f64;
    // Gauss–Kronrod error estimates are very pessimistic for smooth
    // integrands, so asking for tol/10 costs little.
    let tol = tol / 10.0;
    match kind {
        IntegralKind::I => adaptive_gk(
            |b| (PI * qf * b).sin() / ((2.0 * PI * b * t).exp() + 1.0),
            0.0,
            1.0,
            tol,
        ),
        IntegralKind::K => adaptive_gk(
            |b| b * (PI * qf * b).cos() / ((2.0 * PI * b * t).exp() + 1.0),
            0.0,
            1.0,
            tol,
        ),
        IntegralKind::J => adaptive_gk(|b| (PI * qf * b).cos() * sech(PI * b * t), 0.0, 1.0, tol),
    }
}

/// Closed-form value by kind.
pub fn closed_form(kind: IntegralKind, q: i64, t: f64) -> Result<IntegralValue> {
    match kind {
        IntegralKind::I => integral_i(q, t),
        IntegralKind::K => integral_k(q, t),
        IntegralKind::J => integral_j(q, t),
    }
}

/// `Σ_{r≥1} (−1)^{r−1}/(r²+z²)` and its closed form `1/(2z²) − π/(2z sinh πz)`.
pub fn alternating_inverse_square(z: f64, n_terms: usize) -> (f64, f64) {
    let direct = crate::sum::sum((1..=n_terms).map(|r| {
        let r = r as f64;
        parity(r as i64 - 1) / (r * r + z * z)
    }));
    (direct, 1.0 / (2.0 * z * z) - PI * csch(PI * z) / (2.0 * z))
}

/// `Σ_{r≥1} (−1)^{r−1}/(r²+z²)²` and its closed form
/// `1/(2z⁴) − π/(4z³ sinh πz) − π² cosh(πz)/(4z² sinh²(πz))`.
pub fn alternating_inverse_square_squared(z: f64, n_terms: usize) -> (f64, f64) {
    let direct = crate::sum::sum((1..=n_terms).map(|r| {
        let r = r as f64;
        let d = r * r + z * z;
        parity(r as i64 - 1) / (d * d)
    }));
    let cs = csch(PI * z);
    let closed = 1.0 / (2.0 * z.powi(4))
        - PI * cs / (4.0 * z.powi(3))
        - PI * PI * (PI * z).cosh() * cs * cs / (4.0 * z * z);
    (direct, closed)
}

/// `Σ_{r≥0} (−1)^r (2r+1)/((2r+1)²+z²)` (Abel-summed by pairing) and its
/// closed form `π/(4 cosh(πz/2))`.
pub fn alternating_odd(z: f64, n_pairs: usize) -> (f64, f64) {
    // Pairing consecutive terms gives an absolutely convergent series; the
    // final half term is the usual alternating-series midpoint correction.
    let term = |r: usize| {
        let o = 2.0 * r as f64 + 1.0;
        parity(r as i64) * o / (o * o + z * z)
    };
    let n = 2 * n_pairs;
    let mut acc = crate::sum::sum((0..n).map(term));
    acc += 0.5 * term(n);
    (acc, PI * sech(PI * z / 2.0) / 4.0)
}
