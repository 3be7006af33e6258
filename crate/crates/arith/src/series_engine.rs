//! Truncated summation and coefficient recovery for partial-fraction series
//! `F(z) = Σ_{n≥1} f(n)/(n+z)` with nonnegative f.
//!
//! Recovery works from the Lorentzian samples
//! `S(M) = Σ f(n)/((n+M)²+t²) = −Im F(M+it)/t`:
//!
//! ```text
//! f(N) = (t sinh πt / π) [ J_0 S(−N) + Σ_{r≥1} (−1)^r J_r (S(r−N) + S(−r−N)) ]
//! ```
//!
//! and the right-hand side vanishes for N ≤ 0.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::closed_form_integrals::{j_decay_constant, j_zero, JTable};
use crate::error::{domain, Error, Result};
use crate::sum::Neumaier;

/// How the magnitude of the omitted tail is estimated from the last term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailKind {
    /// Terms shrink at least like `e^{−rate·r}`.
    Exponential { rate: f64 },
    /// Terms shrink like `r^{−exponent}`, exponent > 1.
    Polynomial { exponent: f64 },
    /// Alternating with decreasing magnitude.
    Alternating,
}

/// Stopping rule for an infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationPolicy {
    pub abs_tol: f64,
    pub max_terms: usize,
    pub tail_kind: TailKind,
    /// Consecutive below-threshold terms required before stopping.
    pub quiet_run: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 1_000_000,
            tail_kind: TailKind::Polynomial { exponent: 4.0 },
            quiet_run: 5,
        }
    }
}

impl TruncationPolicy {
    pub fn new(abs_tol: f64, max_terms: usize, tail_kind: TailKind, quiet_run: usize) -> Result<Self> {
        let p = Self { abs_tol, max_terms, tail_kind, quiet_run };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_tail(mut self, tail_kind: TailKind) -> Self {
        self.tail_kind = tail_kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return domain(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if self.max_terms == 0 {
            return domain("max_terms must be positive");
        }
        if self.quiet_run == 0 {
            return domain("quiet_run must be at least 1");
        }
        match self.tail_kind {
            TailKind::Polynomial { exponent } if !(exponent > 1.0) => {
                domain(format!("polynomial tail exponent must exceed 1, got {exponent}"))
            }
            TailKind::Exponential { rate } if !(rate > 0.0) => {
                domain(format!("exponential tail rate must be positive, got {rate}"))
            }
            TailKind::Alternating if self.quiet_run < 2 => {
                domain("oscillatory series need quiet_run >= 2")
            }
            _ => Ok(()),
        }
    }

    /// Estimated |tail| after a last term of magnitude `last` at index `r`.
    pub fn tail_estimate(&self, last: f64, r: usize) -> f64 {
        let last = last.abs();
        match self.tail_kind {
            TailKind::Exponential { rate } => {
                let q = (-rate).exp();
                last * q / (1.0 - q)
            }
            TailKind::Polynomial { exponent } => {
                let r = r.max(1) as f64;
                last * r / (exponent - 1.0)
            }
            TailKind::Alternating => last,
        }
    }
}

/// A computed value with its error estimate and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub error_estimate: f64,
    pub terms_used: BTreeMap<String, usize>,
    pub guards_engaged: bool,
}

impl Evaluation {
    pub fn exact(value: f64) -> Self {
        Self { value, error_estimate: 0.0, terms_used: BTreeMap::new(), guards_engaged: false }
    }

    pub fn with_terms(mut self, label: &str, n: usize) -> Self {
        self.count(label, n);
        self
    }

    pub fn count(&mut self, label: &str, n: usize) {
        *self.terms_used.entry(label.to_string()).or_insert(0) += n;
    }

    pub fn total_terms(&self) -> usize {
        self.terms_used.values().sum()
    }

    /// Adds another evaluation's value, estimate and counts into this one.
    pub fn absorb(&mut self, other: &Evaluation) {
        self.value += other.value;
        self.error_estimate += other.error_estimate;
        self.guards_engaged |= other.guards_engaged;
        for (k, v) in &other.terms_used {
            self.count(k, *v);
        }
    }
}

/// Sums a series term by term under `policy`.
///
/// A term is quiet when the tail estimate it implies is below `abs_tol`;
/// summation stops after `quiet_run` consecutive quiet terms.
pub fn sum_series<I>(terms: I, policy: &TruncationPolicy) -> Result<Evaluation>
where
    I: IntoIterator<Item = f64>,
{
    policy.validate()?;
    let mut acc = Neumaier::new();
    let mut quiet = 0;
    let mut n = 0;
    for x in terms {
        if !x.is_finite() {
            return domain(format!("series term {n} is not finite"));
        }
        acc.add(x);
        n += 1;
        let tail = policy.tail_estimate(x, n);
        if tail < policy.abs_tol {
            quiet += 1;
            if quiet >= policy.quiet_run {
                return Ok(Evaluation {
                    value: acc.value(),
                    error_estimate: tail,
                    terms_used: BTreeMap::from([("series".to_string(), n)]),
                    guards_engaged: false,
                });
            }
        } else {
            quiet = 0;
        }
        if n >= policy.max_terms {
            return Err(Error::NotConverged { terms: n, last: x.abs() });
        }
    }
    // A finite generator is summed exactly.
    Ok(Evaluation::exact(acc.value()).with_terms("series", n))
}

/// A function known to equal `Σ_{n≥1} f(n)/(n+z)`.
pub trait SeriesEvaluator: Sync {
    fn eval(&self, z: Complex64) -> Complex64;

    /// Known coefficient f(n), used by oracles; `None` if unknown.
    fn coefficient(&self, n: i64) -> Option<f64>;

    /// Accuracy the evaluator promises for `eval`.
    fn declared_tol(&self) -> f64 {
        1e-14
    }

    /// `Σ f(n)/((n+M)²+t²)`.
    fn lorentz(&self, m: f64, t: f64) -> f64 {
        -self.eval(Complex64::new(m, t)).im / t
    }
}

/// The series `Σ_{m≥1} 1/(k² m⁴ (k m² + z))`, i.e. coefficients
/// `f(n) = q_k(n)/n²`, in closed form.
#[derive(Debug, Clone, Copy)]
pub struct SquareIndicatorSeries {
    pub k: u64,
}

impl SeriesEvaluator for SquareIndicatorSeries {
    fn eval(&self, z: Complex64) -> Complex64 {
        let k = self.k as f64;
        let pi2 = PI * PI;
        let w = z.sqrt();
        let x = w * (PI / k.sqrt());
        // coth with Re x ≥ 0 via e^{−2x}, which cannot overflow.
        let e = (-2.0 * x).exp();
        let coth = (1.0 + e) / (1.0 - e);
        pi2 * pi2 / (90.0 * k * k * z) - pi2 / (6.0 * k * z * z) - 0.5 / (z * z * z)
            + PI * coth / (2.0 * k.sqrt() * z * z * w)
    }

    fn coefficient(&self, n: i64) -> Option<f64> {
        let q = crate::indicator_functions::q_bruteforce(self.k, 1, n) as f64;
        Some(if n > 0 { q / (n * n) as f64 } else { 0.0 })
    }

    fn declared_tol(&self) -> f64 {
        1e-13
    }
}

/// `F(z) = Σ f(n)/(n+z)` for finitely supported f, summed directly.
#[derive(Debug, Clone)]
pub struct FiniteSeries {
    pub coeffs: Vec<f64>,
}

impl FiniteSeries {
    /// f(n) = 2^{−n} truncated where it drops below 2^{−80}.
    pub fn geometric() -> Self {
        Self { coeffs: (1..=80).map(|n| 0.5f64.powi(n)).collect() }
    }

    pub fn from_fn(n_terms: usize, f: impl Fn(u64) -> f64) -> Self {
        Self { coeffs: (1..=n_terms as u64).map(f).collect() }
    }
}

impl SeriesEvaluator for FiniteSeries {
    fn eval(&self, z: Complex64) -> Complex64 {
        let (mut re, mut im) = (Neumaier::new(), Neumaier::new());
        for (i, &c) in self.coeffs.iter().enumerate() {
            let w = c / (z + (i + 1) as f64);
            re.add(w.re);
            im.add(w.im);
        }
        Complex64::new(re.value(), im.value())
    }

    fn coefficient(&self, n: i64) -> Option<f64> {
        if n >= 1 {
            Some(self.coeffs.get(n as usize - 1).copied().unwrap_or(0.0))
        } else {
            Some(0.0)
        }
    }

    fn lorentz(&self, m: f64, t: f64) -> f64 {
        let mut acc = Neumaier::new();
        for (i, &c) in self.coeffs.iter().enumerate() {
            let d = (i + 1) as f64 + m;
            acc.add(c / (d * d + t * t));
        }
        acc.value()
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("t must be positive and finite, got {t}"))
    }
}

/// Recovers f(N) from samples of F at `r − N ± it`. Returns ≈ 0 for N ≤ 0.
pub fn invert_series(
    f: &dyn SeriesEvaluator,
    n: i64,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Evaluation> {
    check_t(t)?;
    policy.validate()?;
    let j = JTable::new(t);
    let cj = j_decay_constant(t);
    let mut acc = Neumaier::new();
    acc.add(j_zero(t) * f.lorentz(-(n as f64), t));
    let mut quiet = 0;
    let mut r: usize = 0;
    let floor = n.unsigned_abs() as usize;
    let tail = loop {
        r += 1;
        let rf = r as f64;
        let s = f.lorentz(rf - n as f64, t) + f.lorentz(-rf - n as f64, t);
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * j.get(r as i64) * s;
        acc.add(term);
        // Beyond the last computed r the J factor is at most C_J/r²; the
        // Lorentzian factor is bounded by its last value's neighbourhood.
        let tail = policy.tail_estimate(term, r).max(cj * s.abs() / rf);
        if r > floor && tail < policy.abs_tol {
            quiet += 1;
            if quiet >= policy.quiet_run {
                break tail;
            }
        } else {
            quiet = 0;
        }
        if r >= policy.max_terms {
            return Err(Error::NotConverged { terms: r, last: term.abs() });
        }
    };
    let scale = t * (PI * t).sinh() / PI;
    Ok(Evaluation {
        value: scale * acc.value(),
        error_estimate: scale * (tail + f.declared_tol() * r as f64 * 1e-2),
        terms_used: BTreeMap::from([("r".to_string(), r)]),
        guards_engaged: false,
    })
}

/// |LHS − RHS| of the identity
///
/// ```text
/// π cosh(πβt)/sinh(πt) · Σ (−1)^n e^{−iπnβ} f(n)
///   = [F(−it) − F(it)]/(2i)
///   + (1/2i) Σ_{k≥1} (−1)^k e^{iπkβ} [F(k−it) − F(k+it)]
///   + (1/2i) Σ_{k≥1} (−1)^k e^{−iπkβ} [F(−k−it) − F(−k+it)]
/// ```
///
/// with f cut off after `n_terms` on both sides (the identity is exact for
/// the truncated coefficients). The k-series runs to `max(4·n_terms, 4096)`
/// followed by a first-order summation-by-parts tail correction.
pub fn beta_identity_residual(f: &dyn Fn(u64) -> f64, beta: f64, t: f64, n_terms: usize) -> Result<f64> {
    if !(beta.abs() <= 1.0) {
        return domain(format!("|beta| must not exceed 1, got {beta}"));
    }
    if t == 0.0 || !t.is_finite() {
        return domain("t must be finite and nonzero");
    }
    let coeffs: Vec<f64> = (1..=n_terms as u64).map(f).collect();
    if coeffs.iter().all(|&c| c == 0.0) {
        return Ok(0.0);
    }
    let phase = |x: f64| Complex64::from_polar(1.0, PI * x);

    let (mut lre, mut lim) = (Neumaier::new(), Neumaier::new());
    for (idx, &c) in coeffs.iter().enumerate() {
        let n = (idx + 1) as f64;
        let sign = if (idx + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let w = phase(-n * beta) * (sign * c);
        lre.add(w.re);
        lim.add(w.im);
    }
    let lhs = Complex64::new(lre.value(), lim.value()) * (PI * (PI * beta * t).cosh() / (PI * t).sinh());

    // [F(z−it) − F(z+it)]/(2i) = t Σ f(n)/((n+z)²+t²) for real z.
    let amp = |z: f64| {
        let mut acc = Neumaier::new();
        for (idx, &c) in coeffs.iter().enumerate() {
            let d = (idx + 1) as f64 + z;
            acc.add(c / (d * d + t * t));
        }
        t * acc.value()
    };
    let kmax = (4 * n_terms).max(4096);
    let rho_p = -phase(beta);
    let rho_m = -phase(-beta);
    let (mut rre, mut rim) = (Neumaier::new(), Neumaier::new());
    let mut push = |w: Complex64| {
        rre.add(w.re);
        rim.add(w.im);
    };
    push(Complex64::new(amp(0.0), 0.0));
    let (mut pp, mut pm) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    for k in 1..=kmax {
        pp *= rho_p;
        pm *= rho_m;
        let kf = k as f64;
        push(pp * amp(kf) + pm * amp(-kf));
    }
    // Tail beyond kmax.
    let tail_of = |rho: Complex64, a_next: f64, side: f64| -> Complex64 {
        if (rho - 1.0).norm() < 1e-9 {
            // Non-oscillating: midpoint integral of each Lorentzian.
            let start = kmax as f64 + 0.5;
            let mut acc = Neumaier::new();
            for (idx, &c) in coeffs.iter().enumerate() {
                let n = (idx + 1) as f64;
                let x = (start + side * n) / t;
                acc.add(c * (PI / 2.0 - x.atan()));
            }
            Complex64::new(acc.value(), 0.0)
        } else {
            rho.powu(kmax as u32 + 1) * a_next / (1.0 - rho)
        }
    };
    let next = (kmax + 1) as f64;
    push(tail_of(rho_p, amp(next), 1.0));
    push(tail_of(rho_m, amp(-next), -1.0));
    let rhs = Complex64::new(rre.value(), rim.value());
    Ok((lhs - rhs).norm())
}

/// |LHS − RHS| of
/// `atan(tanh(πt/2))/(πt) · (F(it) − F(−it))
///    = ½ Σ_{k≥1} (−1)^k (F(k−it) − F(k+it) + F(−k−it) − F(−k+it)) J_k`.
pub fn self_consistency_residual(
    f: &dyn SeriesEvaluator,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    check_t(t)?;
    policy.validate()?;
    let c = |re: f64, im: f64| f.eval(Complex64::new(re, im));
    let lhs = (c(0.0, t) - c(0.0, -t)) * ((PI * t / 2.0).tanh().atan() / (PI * t));
    let j = JTable::new(t);
    let cj = j_decay_constant(t);
    let (mut re, mut im) = (Neumaier::new(), Neumaier::new());
    let mut quiet = 0;
    let mut k = 0usize;
    loop {
        k += 1;
        let kf = k as f64;
        let bracket = c(kf, -t) - c(kf, t) + c(-kf, -t) - c(-kf, t);
        let sign = if k % 2 == 0 { 0.5 } else { -0.5 };
        let w = bracket * (sign * j.get(k as i64));
        re.add(w.re);
        im.add(w.im);
        let tail = policy.tail_estimate(w.norm(), k).max(cj * bracket.norm() / kf);
        if tail < policy.abs_tol {
            quiet += 1;
            if quiet >= policy.quiet_run {
                break;
            }
        } else {
            quiet = 0;
        }
        if k >= policy.max_terms {
            return Err(Error::NotConverged { terms: k, last: w.norm() });
        }
    }
    Ok((lhs - Complex64::new(re.value(), im.value())).norm())
}
