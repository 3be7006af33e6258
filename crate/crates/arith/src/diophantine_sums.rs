//! Weighted sums over the positive solutions of `da² + kb² = N` and
//! `kb² − da² = N`, analytic and by enumeration.
//!
//! For a solution (a, b) put `X = N ∓ da² = kb²`; then `q_k(X)/X² = 1/(k²b⁴)`,
//! so the weighted sums are `Σ_a g(a) q_k(N ∓ da²)/(N ∓ da²)²` and every
//! group is one shifted indicator `Q(N, ∓da²)` (see [`ShiftedEvaluator`]).
//!
//! The unit-weight sums are also available in the second organization: r
//! outermost, then the exponential m-series, with the innermost a-sum
//! replaced by the closed form
//!
//! ```text
//! Σ_{a≥1} 1/(z² + (x + a²)²)      = (π/4) T_{x,z} − 1/(2(x²+z²))
//! Σ_{a≥1} (−1)^a/(z² + (x + a²)²) = (π/2) V_{x,z} − 1/(2(x²+z²))
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::closed_form_integrals::sech;
use crate::error::{domain, Error, Result};
use crate::hyperbolic_kernels::{kernel_t_unchecked, kernel_v_unchecked};
use crate::indicator_functions::{integer_root, parity, ShiftedEvaluator};
use crate::series_engine::{Evaluation, TruncationPolicy};
use crate::sum::Neumaier;

/// Largest a-horizon the analytic a-series will attempt.
const A_CAP: u64 = 200_000;

pub type WeightFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// A weight g (or h) with a declared bound `|g(a)| ≤ bound`.
#[derive(Clone)]
pub struct WeightSpec {
    pub label: String,
    pub bound: f64,
    weight: WeightFn,
    /// Optional bound on `Σ_{a>A} |g(a)|`, used to shorten infinite sums.
    mass_beyond: Option<WeightFn>,
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSpec")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .field("mass_beyond", &self.mass_beyond.is_some())
            .finish()
    }
}

impl WeightSpec {
    pub fn new(label: &str, bound: f64, weight: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.to_string(), bound, weight: Arc::new(weight), mass_beyond: None }
    }

    pub fn with_mass_beyond(mut self, f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        self.mass_beyond = Some(Arc::new(f));
        self
    }

    pub fn unit() -> Self {
        Self::new("unit", 1.0, |_| 1.0)
    }

    pub fn alternating() -> Self {
        Self::new("alternating", 1.0, |a| parity(a as i64))
    }

    /// g(a) = 1/(a+1).
    pub fn reciprocal() -> Self {
        Self::new("reciprocal", 0.5, |a| 1.0 / (a as f64 + 1.0))
    }

    /// g(a) = 2^{−a}.
    pub fn geometric() -> Self {
        Self::new("geometric", 0.5, |a| 0.5f64.powi(a.min(2000) as i32))
            .with_mass_beyond(|a| 0.5f64.powi(a.min(2000) as i32))
    }

    pub fn zero() -> Self {
        Self::new("zero", 0.0, |_| 0.0).with_mass_beyond(|_| 0.0)
    }

    /// Looks up a named preset.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "unit" | "one" => Some(Self::unit()),
            "alternating" => Some(Self::alternating()),
            "reciprocal" => Some(Self::reciprocal()),
            "geometric" => Some(Self::geometric()),
            "zero" => Some(Self::zero()),
            _ => None,
        }
    }

    #[inline]
    pub fn at(&self, a: u64) -> f64 {
        (self.weight)(a)
    }

    pub fn mass_beyond(&self, a: u64) -> Option<f64> {
        self.mass_beyond.as_ref().map(|f| f(a))
    }

    /// Spot-checks the declared bound for a = 1..=horizon.
    pub fn check(&self, horizon: u64) -> Result<()> {
        if !(self.bound >= 0.0) || !self.bound.is_finite() {
            return domain(format!("weight bound must be finite and nonnegative, got {}", self.bound));
        }
        for a in 1..=horizon {
            let v = self.at(a);
            if !v.is_finite() || v.abs() > self.bound * (1.0 + 1e-12) {
                return domain(format!("weight {} violates its bound at a = {a}: {v}", self.label));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationKind {
    /// da² + kb² = N
    Sum,
    /// kb² − da² = N
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiophantineInstance {
    pub n: u64,
    pub d: u64,
    pub k: u64,
    pub kind: EquationKind,
}

impl DiophantineInstance {
    pub fn new(n: u64, d: u64, k: u64, kind: EquationKind) -> Result<Self> {
        if n == 0 || d == 0 || k == 0 {
            return domain(format!("N, d and k must be at least 1, got N={n} d={d} k={k}"));
        }
        Ok(Self { n, d, k, kind })
    }

    /// The shift c = ∓da² attached to a.
    fn shift(&self, a: u64) -> i64 {
        let c = (self.d * a * a) as i64;
        match self.kind {
            EquationKind::Sum => -c,
            EquationKind::Difference => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionList {
    pub pairs: Vec<(u64, u64)>,
    pub truncated_at_b: Option<u64>,
    /// Bound on Σ b^{−4} over omitted solutions (multiply by the weight bound).
    pub tail_bound: f64,
}

fn is_square(x: u64) -> Option<u64> {
    let r = integer_root(x, 2);
    (r * r == x).then_some(r)
}

/// All solutions with a, b ≥ 1; for the difference kind only b ≤ `b_horizon`.
pub fn enumerate_solutions(inst: &DiophantineInstance, b_horizon: u64) -> Result<SolutionList> {
    let DiophantineInstance { n, d, k, kind } = *inst;
    let mut pairs = Vec::new();
    match kind {
        EquationKind::Sum => {
            let mut a = 1;
            while d * a * a < n {
                let rest = n - d * a * a;
                if rest % k == 0 {
                    if let Some(b) = is_square(rest / k) {
                        pairs.push((a, b));
                    }
                }
                a += 1;
            }
            Ok(SolutionList { pairs, truncated_at_b: None, tail_bound: 0.0 })
        }
        EquationKind::Difference => {
            if b_horizon == 0 {
                return domain("b_horizon must be at least 1");
            }
            for b in 1..=b_horizon {
                let kb2 = (k as u128) * (b as u128) * (b as u128);
                if kb2 <= n as u128 {
                    continue;
                }
                let rest = kb2 - n as u128;
                if rest % d as u128 == 0 {
                    let q = rest / d as u128;
                    if q <= u64::MAX as u128 {
                        if let Some(a) = is_square(q as u64) {
                            pairs.push((a, b));
                        }
                    }
                }
            }
            let h = b_horizon as f64;
            Ok(SolutionList { pairs, truncated_at_b: Some(b_horizon), tail_bound: 1.0 / (3.0 * h * h * h) })
        }
    }
}

fn raw_sum(pairs: &[(u64, u64)], g: &WeightSpec) -> f64 {
    crate::sum::sum(pairs.iter().map(|&(a, b)| {
        let b2 = (b as f64) * (b as f64);
        g.at(a) / (b2 * b2)
    }))
}

/// Σ g(a)/b⁴ over the solutions of da² + kb² = N.
pub fn sum_squares_bruteforce(inst: &DiophantineInstance, g: &WeightSpec) -> Result<f64> {
    if inst.kind != EquationKind::Sum {
        return domain("sum_squares_bruteforce needs a sum-kind instance");
    }
    Ok(raw_sum(&enumerate_solutions(inst, 1)?.pairs, g))
}

/// Σ g(a)/b⁴ over solutions of kb² − da² = N with b ≤ horizon, and a bound
/// on the omitted part.
pub fn sum_diff_bruteforce(inst: &DiophantineInstance, g: &WeightSpec, b_horizon: u64) -> Result<(f64, f64)> {
    if inst.kind != EquationKind::Difference {
        return domain("sum_diff_bruteforce needs a difference-kind instance");
    }
    let list = enumerate_solutions(inst, b_horizon)?;
    Ok((raw_sum(&list.pairs, g), g.bound * list.tail_bound))
}

/// Bound on Σ_{a>A} |g(a)| q_k(N+da²)/(N+da²)² ≤ M/(3d²A³).
fn difference_tail(d: u64, bound: f64, a: u64) -> f64 {
    let (d, a) = (d as f64, a as f64);
    bound / (3.0 * d * d * a * a * a)
}

/// Smallest A with the difference-kind a-tail below `tol`.
fn difference_horizon(d: u64, bound: f64, tol: f64) -> Result<u64> {
    if bound == 0.0 {
        return Ok(1);
    }
    let a = (bound / (3.0 * (d * d) as f64 * tol)).cbrt().ceil().max(1.0) as u64;
    if a > A_CAP {
        return Err(Error::NotConverged { terms: a as usize, last: tol });
    }
    Ok(a)
}

/// The per-a shifted indicators Q(N, ∓da²), a = 1..=a_max, with a shared
/// G/J table.
pub fn group_values(
    inst: &DiophantineInstance,
    t: f64,
    policy: &TruncationPolicy,
    a_max: u64,
) -> Result<Vec<Evaluation>> {
    let mut ctx = ShiftedEvaluator::new(inst.k, inst.n as i64, t)?;
    let per = policy.with_tol(policy.abs_tol / a_max.max(1) as f64);
    (1..=a_max).map(|a| ctx.shifted(inst.shift(a), &per)).collect()
}

fn combine(groups: &[Evaluation], g: &WeightSpec, tail: f64) -> Evaluation {
    let mut acc = Neumaier::new();
    let mut out = Evaluation::exact(0.0);
    for (i, e) in groups.iter().enumerate() {
        let w = g.at(i as u64 + 1);
        acc.add(w * e.value);
        out.error_estimate += w.abs() * e.error_estimate;
        out.guards_engaged |= e.guards_engaged;
        for (k, v) in &e.terms_used {
            out.count(k, *v);
        }
    }
    out.count("a", groups.len());
    out.value = acc.value();
    out.error_estimate += tail;
    out
}

/// a-horizon for an instance: past √(N/d) for the sum kind (the extra
/// groups are zero identities), from the a⁻⁴ tail for the difference kind.
fn a_horizon(inst: &DiophantineInstance, bound: f64, tol: f64) -> Result<(u64, f64)> {
    match inst.kind {
        EquationKind::Sum => Ok((integer_root(inst.n / inst.d, 2) + 2, 0.0)),
        EquationKind::Difference => {
            let a = difference_horizon(inst.d, bound, tol)?;
            Ok((a, difference_tail(inst.d, bound, a)))
        }
    }
}

/// The same weighted sum for several weights from one set of groups.
pub fn weighted_sums(
    inst: &DiophantineInstance,
    weights: &[&WeightSpec],
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Vec<Evaluation>> {
    policy.validate()?;
    let bound = weights.iter().map(|g| g.bound).fold(0.0, f64::max);
    if bound == 0.0 {
        return Ok(weights.iter().map(|_| Evaluation::exact(0.0)).collect());
    }
    let (a_max, _) = a_horizon(inst, bound, policy.abs_tol / 2.0)?;
    let groups = group_values(inst, t, policy, a_max)?;
    Ok(weights
        .iter()
        .map(|g| {
            let tail = match inst.kind {
                EquationKind::Sum => 0.0,
                EquationKind::Difference => difference_tail(inst.d, g.bound, a_max),
            };
            combine(&groups, g, tail)
        })
        .collect())
}

/// ≈ (1/k²) Σ_{da²+kb²=N} g(a)/b⁴.
pub fn sum_squares_analytic(
    g: &WeightSpec,
    inst: &DiophantineInstance,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Evaluation> {
    if inst.kind != EquationKind::Sum {
        return domain("sum_squares_analytic needs a sum-kind instance");
    }
    Ok(weighted_sums(inst, &[g], t, policy)?.remove(0))
}

/// ≈ (1/k²) Σ_{kb²−da²=N} g(a)/b⁴ over all (infinitely many) solutions.
pub fn sum_diff_analytic(
    g: &WeightSpec,
    inst: &DiophantineInstance,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Evaluation> {
    if inst.kind != EquationKind::Difference {
        return domain("sum_diff_analytic needs a difference-kind instance");
    }
    Ok(weighted_sums(inst, &[g], t, policy)?.remove(0))
}

/// ≈ Σ_{a=1}^{N−1} h(a) q_k(N−a)/(N−a)².
pub fn weighted_finite_analytic(
    h: &WeightSpec,
    k: u64,
    n: u64,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Evaluation> {
    policy.validate()?;
    if n == 0 {
        return domain("N must be at least 1");
    }
    let mut ctx = ShiftedEvaluator::new(k, n as i64, t)?;
    let per = policy.with_tol(policy.abs_tol / n as f64);
    let mut groups = Vec::with_capacity(n as usize);
    for a in 1..n {
        groups.push(if h.at(a) == 0.0 { Evaluation::exact(0.0) } else { ctx.shifted(-(a as i64), &per)? });
    }
    Ok(combine(&groups, h, 0.0))
}

/// ≈ Σ_{a≥1} h(a) q_k(N+a)/(N+a)².
///
/// The a-series stops where `Σ_{a>A} |h(a)| q_k(N+a)/(N+a)²` is below half
/// the tolerance, using `mass_beyond` when the weight provides it and the
/// sparsity of k·m² otherwise.
pub fn weighted_infinite_analytic(
    h: &WeightSpec,
    k: u64,
    n: u64,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Evaluation> {
    policy.validate()?;
    if n == 0 || k == 0 {
        return domain("N and k must be at least 1");
    }
    let kf = k as f64;
    let tail = |a: u64| {
        // Σ_{km² > N+A} 1/(k²m⁴) ≤ 1/(k² m0⁴) + 1/(3k² m0³)
        let m0 = integer_root((n + a) / k, 2) + 1;
        let m0 = m0 as f64;
        let sparse = h.bound * (1.0 / m0.powi(4) + 1.0 / (3.0 * m0.powi(3))) / (kf * kf);
        match h.mass_beyond(a) {
            Some(mass) => {
                let x = (n + a + 1) as f64;
                sparse.min(mass / (x * x))
            }
            None => sparse,
        }
    };
    let goal = policy.abs_tol / 2.0;
    let mut a_max = 1u64;
    while tail(a_max) > goal {
        a_max = (a_max * 2).max(a_max + 1);
        if a_max > A_CAP {
            return Err(Error::NotConverged { terms: a_max as usize, last: tail(a_max) });
        }
    }
    // refine downwards by bisection
    let (mut lo, mut hi) = (a_max / 2, a_max);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if tail(mid) > goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a_max = hi;
    let mut ctx = ShiftedEvaluator::new(k, n as i64, t)?;
    let per = policy.with_tol(policy.abs_tol / (2.0 * a_max as f64));
    let mut groups = Vec::with_capacity(a_max as usize);
    for a in 1..=a_max {
        groups.push(if h.at(a) == 0.0 { Evaluation::exact(0.0) } else { ctx.shifted(a as i64, &per)? });
    }
    Ok(combine(&groups, h, tail(a_max)))
}

/// ≈ Σ_{d|N, N/d>d} g(N/d − d)/(N/d + d)⁴, as the difference-kind sum
/// b² − a² = 4N.
pub fn divisor_pair_sum_analytic(g: &WeightSpec, n: u64, t: f64, policy: &TruncationPolicy) -> Result<Evaluation> {
    let inst = DiophantineInstance::new(4 * n, 1, 1, EquationKind::Difference)?;
    sum_diff_analytic(g, &inst, t, policy)
}

/// Σ_{d|N, N/d>d} g(N/d − d)/(N/d + d)⁴ by divisor enumeration.
pub fn divisor_pair_sum_bruteforce(g: &WeightSpec, n: u64) -> f64 {
    let mut acc = Neumaier::new();
    let mut d = 1;
    while d * d < n {
        if n % d == 0 {
            let (a, b) = (n / d - d, (n / d + d) as f64);
            acc.add(g.at(a) / (b * b * b * b));
        }
        d += 1;
    }
    acc.value()
}

/// Unit (or alternating) weight in the r / m / closed-form organization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnitWeight {
    One,
    Alternating,
}

impl UnitWeight {
    fn at(self, a: u64) -> f64 {
        match self {
            UnitWeight::One => 1.0,
            UnitWeight::Alternating => parity(a as i64),
        }
    }

    /// Σ_{a≥1} g(a)/(z² + (x + a²)²) in closed form.
    fn inner(self, x: f64, z: f64) -> (f64, bool) {
        let (kv, scale) = match self {
            UnitWeight::One => (kernel_t_unchecked(x, z), PI / 4.0),
            UnitWeight::Alternating => (kernel_v_unchecked(x, z), PI / 2.0),
        };
        (scale * kv.value - 0.5 / (x * x + z * z), kv.overflow_guarded)
    }
}

/// `Σ g(a)/b⁴`-type sum with unit or alternating weight, evaluated with the
/// a-sums of the exponential m-series in closed form.
pub fn closed_form_unit_sum(
    inst: &DiophantineInstance,
    weight: UnitWeight,
    t: f64,
    policy: &TruncationPolicy,
) -> Result<Evaluation> {
    policy.validate()?;
    let DiophantineInstance { n, d, k, kind } = *inst;
    let tol = policy.abs_tol;
    let mut ctx = ShiftedEvaluator::new(k, n as i64, t)?;
    let coeffs = *ctx.coefficients();
    let pref = ctx.prefactor();
    let df = d as f64;
    // Every a enters the closed forms, so both kinds need the a⁻⁴ horizon.
    // Groups past it are only partly summed; what is missing adds up to
    // their Q values, bounded like the difference-kind tail.
    let a_max = difference_horizon(d, 1.0, tol / 2.0)?.max(integer_root(n / d, 2) + 2);
    let a_tail = difference_tail(d, 1.0, a_max);
    let mut out = Evaluation::exact(0.0);

    // Rational and exponential blocks, grouped per a.
    let mut ue = Neumaier::new();
    let mut exp_terms = 0;
    for a in 1..=a_max {
        let x = n as i64 + inst.shift(a);
        let (e, nt) = coeffs.e_series(x, tol / a_max as f64);
        exp_terms += nt;
        ue.add(weight.at(a) * (coeffs.u(x) + e));
    }
    out.count("exp", exp_terms);

    // cosh-weighted G sums: only |r ± c| ≲ 45t contribute.
    let reach = (140.0 * t / PI).ceil() as i64;
    let mut cosh = Neumaier::new();
    let gm0 = ctx.g_minus(0);
    for a in 1..=a_max {
        let c = inst.shift(a);
        let arg = |q: i64| sech(PI * q as f64 / (2.0 * t));
        let mut s = Neumaier::new();
        s.add(gm0 * arg(c));
        // r + c within reach, and r − c within reach
        let visit = |lo: i64, hi: i64, plus: bool, ctx: &mut ShiftedEvaluator, s: &mut Neumaier| {
            for r in lo.max(1)..=hi {
                let ru = r as usize;
                let w = if plus { ctx.g_plus(ru) * arg(r + c) } else { ctx.g_minus(ru) * arg(r - c) };
                s.add(if r % 2 == 0 { w } else { -w });
            }
        };
        visit(-c - reach, -c + reach, true, &mut ctx, &mut s);
        visit(c - reach, c + reach, false, &mut ctx, &mut s);
        cosh.add(weight.at(a) * parity(c) * s.value() / (2.0 * t));
    }

    // Exponential m-series with the closed-form a-sums, r outermost.
    let mut m_max = 0usize;
    while {
        let o = 2.0 * m_max as f64 + 1.0;
        o * (-PI * t * o).exp() > 1e-2 * tol * t.min(1.0).powi(2)
    } {
        m_max += 1;
    }
    let zs: Vec<(f64, f64)> = (0..m_max)
        .map(|m| {
            let o = 2.0 * m as f64 + 1.0;
            (parity(m as i64) * o * (-PI * t * o).exp(), t * o)
        })
        .collect();
    let sgn = match kind {
        EquationKind::Sum => -1.0,
        EquationKind::Difference => 1.0,
    };
    let mut series = Neumaier::new();
    // G_{−N} Σ_a g(a)/(z² + d²a⁴), summed directly
    for &(w, z) in &zs {
        let mut s = Neumaier::new();
        for a in 1..=a_max {
            let a2 = (a * a) as f64;
            s.add(weight.at(a) / (z * z + df * df * a2 * a2));
        }
        series.add(w * gm0 * s.value());
    }
    let floor = (n + d * a_max * a_max) as usize;
    let block = 256usize.max((4.0 * ((floor as f64) * k as f64).sqrt()) as usize);
    let mut r = 0usize;
    let mut quiet = 0;
    let mut guarded = false;
    let r_tail = loop {
        let end = r + block;
        let mut part = Neumaier::new();
        for rr in r + 1..=end {
            let rf = rr as f64;
            let (gp, gm) = (ctx.g_plus(rr), ctx.g_minus(rr));
            for &(w, z) in &zs {
                let (ip, g1) = weight.inner(sgn * rf / df, z / df);
                let (im, g2) = weight.inner(-sgn * rf / df, z / df);
                guarded |= g1 || g2;
                part.add(w * (gp * ip + gm * im) / (df * df));
            }
        }
        let delta = part.value();
        series.add(delta);
        r = end;
        let tail = delta.abs() * (r.saturating_sub(floor)).max(block) as f64 / block as f64;
        if r >= floor + block {
            if tail * pref < tol / 4.0 {
                quiet += 1;
                if quiet >= 2 {
                    break tail;
                }
            } else {
                quiet = 0;
            }
        }
        if r >= policy.max_terms {
            return Err(Error::NotConverged { terms: r, last: tail });
        }
    };
    out.count("r", r);
    out.count("m", m_max);
    out.count("a", a_max as usize);

    let value = ue.value() + pref * cosh.value() - pref * (2.0 * t / PI) * series.value();
    out.value = value;
    out.error_estimate = a_tail + pref * (2.0 * t / PI) * r_tail + 1e-15 * value.abs();
    out.guards_engaged = guarded || ctx.guards_engaged();
    Ok(out)
}

/// Unit-weight sum over da² + kb² = N in the closed-form organization.
pub fn unit_sum_squares(inst: &DiophantineInstance, t: f64, policy: &TruncationPolicy) -> Result<Evaluation> {
    if inst.kind != EquationKind::Sum {
        return domain("unit_sum_squares needs a sum-kind instance");
    }
    closed_form_unit_sum(inst, UnitWeight::One, t, policy)
}

/// Unit-weight sum over kb² − da² = N in the closed-form organization.
pub fn unit_sum_diff(inst: &DiophantineInstance, t: f64, policy: &TruncationPolicy) -> Result<Evaluation> {
    if inst.kind != EquationKind::Difference {
        return domain("unit_sum_diff needs a difference-kind instance");
    }
    closed_form_unit_sum(inst, UnitWeight::One, t, policy)
}
