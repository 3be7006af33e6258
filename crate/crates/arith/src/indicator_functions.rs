//! The indicators `q_{k,s}(N)`, equal to 1 when `N = k m^{2s}` for a natural
//! m and 0 otherwise, together with their analytic representations.
//!
//! With `c = coth(πt)`, `S = sinh(πt)/(4√k)` and
//!
//! ```text
//! 𝒢(N, c) = G_{−N} J_c + Σ_{r≥1} (−1)^r (G_{r−N} J_{r+c} + G_{−r−N} J_{r−c})
//! ```
//!
//! the two representations implemented are
//!
//! ```text
//! q_k(N)/N² = μ_N + (−1)^N (π³c/3k) I_N + (−1)^N π²c K_N + S·𝒢(N, 0)
//! q_k(X)/X² = U_X + E(X) + (−1)^c S·𝒢(N, c),      X = N + c
//! ```
//!
//! Both right-hand sides vanish for N ≤ 0 (resp. X ≤ 0).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::closed_form_integrals::{csch, integral_i_tol, integral_k_tol, JTable};
use crate::error::{domain, Error, Result};
use crate::hyperbolic_kernels::{kernel_g_unchecked, GUARD};
use crate::series_engine::{invert_series, Evaluation, SeriesEvaluator, TruncationPolicy};
use crate::sum::Neumaier;

#[inline]
pub(crate) fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Largest r with r^p ≤ x, by binary search on exact integer powers.
pub fn integer_root(x: u64, p: u32) -> u64 {
    if p == 1 || x < 2 {
        return x;
    }
    if p == 2 {
        return x.isqrt();
    }
    let (mut lo, mut hi) = (1u64, 1u64 << (64 / p + 1).min(63));
    // invariant: lo^p ≤ x < hi^p
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match mid.checked_pow(p) {
            Some(v) if v <= x => lo = mid,
            _ => hi = mid,
        }
    }
    lo
}

/// 1 if `n = k m^{2s}` for some natural m, else 0.
pub fn q_bruteforce(k: u64, s: u32, n: i64) -> u8 {
    if k == 0 || s == 0 || n <= 0 || n as u64 % k != 0 {
        return 0;
    }
    let x = n as u64 / k;
    let r = integer_root(x, 2 * s);
    (r.checked_pow(2 * s) == Some(x)) as u8
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("t must be positive and finite, got {t}"))
    }
}

fn check_k(k: u64) -> Result<()> {
    if k == 0 {
        domain("k must be at least 1")
    } else {
        Ok(())
    }
}

/// The constant blocks μ_N and U_X.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoefficientTable {
    pub k: u64,
    pub t: f64,
    coth: f64,
}

impl CoefficientTable {
    pub fn new(k: u64, t: f64) -> Result<Self> {
        check_k(k)?;
        check_t(t)?;
        Ok(Self { k, t, coth: 1.0 / (PI * t).tanh() })
    }

    pub fn mu(&self, n: i64) -> f64 {
        let (k, c) = (self.k as f64, self.coth);
        let pi2 = PI * PI;
        if n == 0 {
            return pi2 * pi2 / (90.0 * k * k) + pi2 / 4.0 * (2.0 * c * c - c - 2.0 / 3.0);
        }
        let nf = n as f64;
        let p = 1.0 + parity(n - 1);
        1.0 / (2.0 * nf * nf) - p * c / (2.0 * nf * nf) + p * pi2 * c / (6.0 * k * nf)
            - pi2 / (6.0 * k * nf)
    }

    /// U_X; the hyperbolic terms are dropped beyond the overflow guard, where
    /// they are below e^{−300}.
    pub fn u(&self, x: i64) -> f64 {
        let (k, c, t) = (self.k as f64, self.coth, self.t);
        let pi2 = PI * PI;
        if x == 0 {
            return self.mu(0) + pi2 * c / (48.0 * t * t);
        }
        let xf = x as f64;
        let mut v = pi2 / (3.0 * k * xf * (2.0 * PI * t).exp_m1()) + (1.0 - c) / (2.0 * xf * xf);
        let a = PI * xf.abs() / (2.0 * t);
        if a < GUARD {
            let cs = csch(a) * xf.signum();
            let coth_a = 1.0 / a.tanh();
            let sg = parity(x);
            v += -sg * PI * pi2 * c * cs / (12.0 * k * t) + sg * pi2 * c * coth_a * csch(a) / (8.0 * t * t);
        }
        v
    }

    /// E(X) = Σ_{r≥1} (−1)^{r−1} e^{−2πtr} [−(π²c/3k) X/D − 2πtc r/D − c(4t²r²−X²)/D²],
    /// D = 4t²r² + X². Returns (value, terms).
    pub fn e_series(&self, x: i64, tol: f64) -> (f64, usize) {
        let (k, c, t) = (self.k as f64, self.coth, self.t);
        let xf = x as f64;
        let mut acc = Neumaier::new();
        let mut r = 1usize;
        loop {
            let rf = r as f64;
            let e = (-2.0 * PI * t * rf).exp();
            let d = 4.0 * t * t * rf * rf + xf * xf;
            let term = -(PI * PI * c / (3.0 * k)) * xf / d - 2.0 * PI * t * c * rf / d
                - c * (4.0 * t * t * rf * rf - xf * xf) / (d * d);
            acc.add(parity(r as i64 - 1) * e * term);
            // the bracket is at most ~ (π²c/3k + 2πc + c)/(2t r): bound generously
            if e * (PI * PI * c / k + 10.0 * c) / (t * rf).min(1.0) < tol * 1e-3 || r >= 400 {
                return (acc.value(), r);
            }
            r += 1;
        }
    }
}

/// Result of summing the G block 𝒢(N, c).
#[derive(Debug, Clone, Copy)]
pub(crate) struct BlockSum {
    pub value: f64,
    pub tail: f64,
    pub terms: usize,
    /// Σ|terms|, for the rounding part of the error estimate.
    pub mass: f64,
}

/// Per-N cache of G_{r−N}, G_{−r−N} and J_q, shared by every shift c.
#[derive(Debug, Clone)]
pub struct ShiftedEvaluator {
    pub k: u64,
    pub n: i64,
    pub t: f64,
    sqrt_k: f64,
    prefactor: f64,
    coeffs: CoefficientTable,
    g_plus: Vec<f64>,
    g_minus: Vec<f64>,
    jt: JTable,
    guarded: bool,
}

impl ShiftedEvaluator {
    pub fn new(k: u64, n: i64, t: f64) -> Result<Self> {
        let coeffs = CoefficientTable::new(k, t)?;
        let sqrt_k = (k as f64).sqrt();
        let mut s = Self {
            k,
            n,
            t,
            sqrt_k,
            prefactor: (PI * t).sinh() / (4.0 * sqrt_k),
            coeffs,
            g_plus: Vec::new(),
            g_minus: Vec::new(),
            jt: JTable::new(t),
            guarded: false,
        };
        s.ensure(256);
        Ok(s)
    }

    pub fn coefficients(&self) -> &CoefficientTable {
        &self.coeffs
    }

    /// sinh(πt)/(4√k).
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    fn ensure(&mut self, r: usize) {
        let nf = self.n as f64;
        while self.g_plus.len() <= r {
            let rf = self.g_plus.len() as f64;
            let a = kernel_g_unchecked(rf - nf, self.t, self.sqrt_k);
            let b = kernel_g_unchecked(-rf - nf, self.t, self.sqrt_k);
            self.guarded |= a.overflow_guarded || b.overflow_guarded;
            self.g_plus.push(a.value);
            self.g_minus.push(b.value);
        }
    }

    /// G_{r−N} for r ≥ 0.
    pub fn g_plus(&mut self, r: usize) -> f64 {
        self.ensure(r);
        self.g_plus[r]
    }

    /// G_{−r−N} for r ≥ 0.
    pub fn g_minus(&mut self, r: usize) -> f64 {
        self.ensure(r);
        self.g_minus[r]
    }

    pub fn j(&self, q: i64) -> f64 {
        self.jt.get(q)
    }

    pub fn guards_engaged(&self) -> bool {
        self.guarded
    }

    /// 𝒢(N, c) without the prefactor, summed in blocks until the estimated
    /// remainder `|last block| · w / block` stays below `tol` twice running,
    /// w being the distance past max(|N|, |c|).
    ///
    /// The remainder decays roughly like r^{−5/2} once r is past both N and
    /// |c|; the block length exceeds the spacing of the resonances of G_{−r−N}
    /// so that a block cannot fall silently between two of them.
    pub(crate) fn g_block(&mut self, c: i64, tol: f64, max_terms: usize) -> Result<BlockSum> {
        let ca = c.unsigned_abs() as usize;
        let floor = (self.n.unsigned_abs() as usize).max(ca);
        let reach = (self.n.unsigned_abs() as f64 + ca as f64 + 1.0) * self.k as f64;
        let block = 256usize.max((4.0 * reach.sqrt()) as usize);
        self.ensure(floor + 2 * block);
        self.jt.extend_to(floor + ca + 2 * block);

        let mut acc = Neumaier::new();
        let first = self.g_minus[0] * self.jt.get(c);
        acc.add(first);
        let mut mass = first.abs();
        let mut r = 0usize;
        let mut quiet = 0;
        loop {
            let end = r + block;
            self.ensure(end);
            self.jt.extend_to(end + ca);
            let mut part = Neumaier::new();
            for rr in r + 1..=end {
                let ri = rr as i64;
                let w = self.g_plus[rr] * self.jt.get(ri + c) + self.g_minus[rr] * self.jt.get(ri - c);
                part.add(if rr % 2 == 0 { w } else { -w });
                mass += w.abs();
            }
            let delta = part.value();
            acc.add(delta);
            r = end;
            let tail = delta.abs() * (r - floor.min(r)).max(block) as f64 / block as f64;
            if r >= floor + block {
                if tail < tol {
                    quiet += 1;
                    if quiet >= 2 {
                        return Ok(BlockSum { value: acc.value(), tail, terms: r, mass });
                    }
                } else {
                    quiet = 0;
                }
            }
            if r >= max_terms {
                return Err(Error::NotConverged { terms: r, last: tail });
            }
        }
    }

    /// q_k(N+c)/(N+c)² via U_X + E(X) + (−1)^c S 𝒢(N, c); ≈ 0 when N+c ≤ 0.
    pub fn shifted(&mut self, c: i64, policy: &TruncationPolicy) -> Result<Evaluation> {
        policy.validate()?;
        let x = self.n + c;
        let block = self.g_block(c, policy.abs_tol / self.prefactor, policy.max_terms)?;
        let (e, e_terms) = self.coeffs.e_series(x, policy.abs_tol);
        let u = self.coeffs.u(x);
        let g = self.prefactor * block.value;
        let value = u + e + parity(c) * g;
        let rounding = 4.0 * f64::EPSILON * (u.abs() + e.abs() + self.prefactor * block.mass);
        Ok(Evaluation {
            value,
            error_estimate: self.prefactor * block.tail + rounding,
            terms_used: BTreeMap::from([("r".to_string(), block.terms), ("exp".to_string(), e_terms)]),
            guards_engaged: self.guarded,
        })
    }
}

/// Evaluates μ_N + I/K terms + S 𝒢(N, 0) for any integer N.
fn q_analytic_any(k: u64, n: i64, t: f64, policy: &TruncationPolicy) -> Result<Evaluation> {
    policy.validate()?;
    let mut ctx = ShiftedEvaluator::new(k, n, t)?;
    let coeffs = *ctx.coefficients();
    let c = coeffs.coth;
    let kf = k as f64;
    let i_n = integral_i_tol(n, t, policy.abs_tol * 1e-2)?;
    let k_n = integral_k_tol(n, t, policy.abs_tol * 1e-2)?;
    let block = ctx.g_block(0, policy.abs_tol / ctx.prefactor, policy.max_terms)?;
    let sg = parity(n);
    let parts = [
        coeffs.mu(n),
        sg * PI * PI * PI * c / (3.0 * kf) * i_n.value,
        sg * PI * PI * c * k_n.value,
        ctx.prefactor * block.value,
    ];
    let value = crate::sum::sum(parts);
    let mass = parts[..3].iter().map(|v| v.abs()).sum::<f64>() + ctx.prefactor * block.mass;
    Ok(Evaluation {
        value,
        error_estimate: ctx.prefactor * block.tail
            + PI * PI * c * (PI / kf * i_n.error_estimate + k_n.error_estimate)
            + 4.0 * f64::EPSILON * mass,
        terms_used: BTreeMap::from([
            ("r".to_string(), block.terms),
            ("m".to_string(), i_n.series_terms_used + k_n.series_terms_used),
        ]),
        guards_engaged: ctx.guards_engaged(),
    })
}

/// ≈ q_k(N)/N² for N ≥ 1.
pub fn q_analytic(k: u64, n: i64, t: f64, policy: &TruncationPolicy) -> Result<Evaluation> {
    if n < 1 {
        return domain(format!("N must be at least 1, got {n}"));
    }
    q_analytic_any(k, n, t, policy)
}

/// |right-hand side| of the analytic representation at N ≤ 0.
pub fn zero_identity_residual(k: u64, n: i64, t: f64, policy: &TruncationPolicy) -> Result<f64> {
    if n > 0 {
        return domain(format!("N must be zero or negative, got {n}"));
    }
    Ok(q_analytic_any(k, n, t, policy)?.value.abs())
}

/// A rounded analytic indicator value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub value: u8,
    pub residual: f64,
    pub evaluation: Evaluation,
}

/// Rounds N²·q_analytic to {0, 1}.
pub fn q_classify(k: u64, n: i64, t: f64, policy: &TruncationPolicy) -> Result<Classification> {
    let evaluation = q_analytic(k, n, t, policy)?;
    let scaled = evaluation.value * (n * n) as f64;
    let value = if scaled >= 0.5 { 1u8 } else { 0u8 };
    let residual = (scaled - value as f64).abs();
    if residual >= 0.25 {
        return Err(Error::Ambiguous { value: scaled, residual });
    }
    Ok(Classification { value, residual, evaluation })
}

/// ≈ q_k(N+c)/(N+c)² through the shifted representation.
pub fn q_shifted_analytic(
    k: u64,
    n: i64,
    c: i64,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Evaluation> {
    if n < 1 {
        return domain(format!("N must be at least 1, got {n}"));
    }
    ShiftedEvaluator::new(k, n, t)?.shifted(c, policy)
}

/// `Σ_m 1/(k² m^{4s} (k m^{2s} + z))`, whose coefficients are q_{k,s}(n)/n².
#[derive(Debug, Clone, Copy)]
pub struct PowerIndicatorSeries {
    pub k: u64,
    pub s: u32,
}

impl PowerIndicatorSeries {
    /// Visits (m, k m^{2s}, 1/(k² m^{4s})) until the terms past the
    /// resonance at `reach` are below the tail bound.
    fn walk(&self, reach: f64, mut f: impl FnMut(f64, f64)) {
        let k = self.k as f64;
        let e = 2 * self.s as i32;
        let mut m = 1u64;
        loop {
            let mf = m as f64;
            let p = k * mf.powi(e);
            f(p, 1.0 / (p * p));
            // beyond 2·reach, |p + z| ≥ p/2: remainder ≤ 4/(k⁴ (4e−1) m^{4e−1})
            if p > 2.0 * reach + 1.0 {
                let tail = 4.0 / (k.powi(4) * (4.0 * e as f64 - 1.0) * mf.powi(4 * e - 1));
                if tail < 1e-20 {
                    return;
                }
            }
            m += 1;
        }
    }
}

impl SeriesEvaluator for PowerIndicatorSeries {
    fn eval(&self, z: Complex64) -> Complex64 {
        let (mut re, mut im) = (Neumaier::new(), Neumaier::new());
        self.walk(z.norm(), |p, w| {
            let v = w / (z + p);
            re.add(v.re);
            im.add(v.im);
        });
        Complex64::new(re.value(), im.value())
    }

    fn coefficient(&self, n: i64) -> Option<f64> {
        Some(if n > 0 { q_bruteforce(self.k, self.s, n) as f64 / (n * n) as f64 } else { 0.0 })
    }

    /// H_{k,s}(M) = Σ_m 1/(k² m^{4s} ((k m^{2s} + M)² + t²)).
    fn lorentz(&self, m: f64, t: f64) -> f64 {
        let mut acc = Neumaier::new();
        self.walk(m.abs(), |p, w| {
            let d = p + m;
            acc.add(w / (d * d + t * t));
        });
        acc.value()
    }
}

/// ≈ q_{k,s}(N)/N² by inverting the H_{k,s} samples.
pub fn q_general_analytic(
    k: u64,
    s: u32,
    n: i64,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Evaluation> {
    check_k(k)?;
    if s == 0 {
        return domain("s must be at least 1");
    }
    if n < 1 {
        return domain(format!("N must be at least 1, got {n}"));
    }
    invert_series(&PowerIndicatorSeries { k, s }, n, t, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default().with_tol(1e-12)
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(q_bruteforce(1, 1, 4), 1);
        assert_eq!(q_bruteforce(2, 1, 8), 1);
        assert_eq!(q_bruteforce(3, 2, 5), 0);
        assert_eq!(q_bruteforce(1, 1, 0), 0);
        assert_eq!(q_bruteforce(1, 1, -4), 0);
        assert_eq!(q_bruteforce(1, 1, (1i64 << 62) - 1), 0);
        assert_eq!(q_bruteforce(1, 1, 3037000499i64 * 3037000499), 1);
        assert_eq!(q_bruteforce(1, 2, 16), 1);
        assert_eq!(integer_root(u64::MAX, 2), 4294967295);
    }

    #[test]
    fn analytic_examples() {
        let v = q_analytic(1, 1, 1.0, &pol()).unwrap().value;
        assert!((v - 1.0).abs() < 1e-9, "{v}");
        let v = q_analytic(1, 2, 1.0, &pol()).unwrap().value;
        assert!(v.abs() * 4.0 < 1e-4, "{v}");
        let v = q_analytic(2, 8, 1.0, &pol()).unwrap().value;
        assert!((v - 1.0 / 64.0).abs() < 1e-9, "{v}");
        assert!(q_analytic(1, 0, 1.0, &pol()).is_err());
    }

    #[test]
    fn classify_examples() {
        for &(k, n, want) in &[(1u64, 49i64, 1u8), (1, 50, 0), (5, 45, 1)] {
            let c = q_classify(k, n, 1.0, &pol()).unwrap();
            assert_eq!(c.value, want);
            assert!(c.residual < 1e-3);
        }
    }

    #[test]
    fn zero_identity_examples() {
        for &(k, n, t) in &[(1u64, 0i64, 1.0), (2, -1, 1.0), (1, -10, 2.0)] {
            let r = zero_identity_residual(k, n, t, &pol()).unwrap();
            assert!(r < 1e-6, "k={k} N={n}: {r}");
        }
        assert!(zero_identity_residual(1, 1, 1.0, &pol()).is_err());
    }

    #[test]
    fn shifted_examples() {
        let v = q_shifted_analytic(1, 10, 6, 1.0, &pol()).unwrap().value;
        assert!((v - 1.0 / 256.0).abs() < 1e-9, "{v}");
        let v = q_shifted_analytic(1, 10, -10, 1.0, &pol()).unwrap().value;
        assert!(v.abs() < 1e-6, "{v}");
        let v = q_shifted_analytic(1, 10, 7, 1.0, &pol()).unwrap().value;
        assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn general_examples() {
        let p = TruncationPolicy::default().with_tol(1e-10);
        let v = q_general_analytic(1, 2, 16, 1.0, &p).unwrap().value;
        assert!((v - 1.0 / 256.0).abs() < 1e-8, "{v}");
        let v = q_general_analytic(2, 2, 32, 1.0, &p).unwrap().value;
        assert!((v - 1.0 / 1024.0).abs() < 1e-8, "{v}");
        let v = q_general_analytic(1, 2, 8, 1.0, &p).unwrap().value;
        assert!(v.abs() < 1e-8, "{v}");
    }

    #[test]
    fn coefficient_table_limits() {
        // U_X → μ_0 + π²c/(48t²) is a removable limit of the X ≠ 0 form only
        // after adding E; check the pieces stay finite instead.
        let ct = CoefficientTable::new(1, 1.0).unwrap();
        for x in [-1000i64, -3, -1, 1, 3, 1000] {
            assert!(ct.u(x).is_finite());
            assert!(ct.mu(x).is_finite());
        }
    }
}
