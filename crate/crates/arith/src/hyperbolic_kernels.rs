//! The kernels u, v, T, V and G.
//!
//! Every kernel is a ratio of the form `sinh(2x)/(sinh²x + sin²y)` (or its
//! `sin(2y)` partner). Below [`GUARD`] those are evaluated directly; above it
//! they are rewritten in terms of `e^{-2x}`, which never overflows.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::sum::Neumaier;

/// Largest hyperbolic argument evaluated with `sinh`/`cosh` directly.
pub const GUARD: f64 = 300.0;

/// Real and imaginary parts of the principal square root of `M + it`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlaneRoot {
    pub m: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// A kernel value together with whether the overflow guard was used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    pub overflow_guarded: bool,
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("t must be positive and finite, got {t}"))
    }
}

/// `(u, v)` with `(u + iv)² = M + it`, both positive for `t > 0`.
pub fn half_plane_root(m: f64, t: f64) -> Result<HalfPlaneRoot> {
    check_t(t)?;
    if !m.is_finite() {
        return domain(format!("M must be finite, got {m}"));
    }
    Ok(root_unchecked(m, t))
}

#[inline]
pub(crate) fn root_unchecked(m: f64, t: f64) -> HalfPlaneRoot {
    let r = m.hypot(t);
    // Only one of the two radicands suffers cancellation; recover that root
    // from 2uv = t.
    let (u, v) = if m >= 0.0 {
        let u = ((r + m) / 2.0).sqrt();
        (u, t / (2.0 * u))
    } else {
        let v = ((r - m) / 2.0).sqrt();
        (t / (2.0 * v), v)
    };
    HalfPlaneRoot { m, t, u, v }
}

/// `sinh(2x)/(sinh²x + sin²y)` and `sin(2y)/(sinh²x + sin²y)` for `x > 0`,
/// plus the guard flag.
#[inline]
pub(crate) fn coth_ratios(x: f64, y: f64) -> (f64, f64, bool) {
    let (sy, cy) = y.sin_cos();
    if x <= GUARD {
        let sx = x.sinh();
        let den = sx * sx + sy * sy;
        ((2.0 * x).sinh() / den, 2.0 * sy * cy / den, false)
    } else {
        let e = (-2.0 * x).exp();
        let den = (1.0 - e) * (1.0 - e) + 4.0 * e * sy * sy;
        (2.0 * (1.0 - e * e) / den, 8.0 * e * sy * cy / den, true)
    }
}

/// `sinh(x)/(sinh²x + sin²y)` and `cosh(x)/(sinh²x + sin²y)`.
#[inline]
fn half_ratios(x: f64, y: f64) -> (f64, f64, bool) {
    let sy = y.sin();
    if x <= GUARD {
        let sx = x.sinh();
        let den = sx * sx + sy * sy;
        (sx / den, x.cosh() / den, false)
    } else {
        let e = (-x).exp();
        let e2 = e * e;
        let den = (1.0 - e2) * (1.0 - e2) + 4.0 * e2 * sy * sy;
        (2.0 * e * (1.0 - e2) / den, 2.0 * e * (1.0 + e2) / den, true)
    }
}

/// The kernel T, which closes `Σ_{n≥1} 1/(t² + (n² + M)²)`.
pub fn kernel_t(m: f64, t: f64) -> Result<KernelValue> {
    check_t(t)?;
    Ok(kernel_t_unchecked(m, t))
}

#[inline]
pub(crate) fn kernel_t_unchecked(m: f64, t: f64) -> KernelValue {
    let HalfPlaneRoot { u, v, .. } = root_unchecked(m, t);
    let (a, b, guarded) = coth_ratios(PI * u, PI * v);
    KernelValue {
        value: (v * a + u * b) / (t * m.hypot(t)),
        overflow_guarded: guarded,
    }
}

/// The kernel V, the alternating partner of T.
pub fn kernel_v(m: f64, t: f64) -> Result<KernelValue> {
    check_t(t)?;
    Ok(kernel_v_unchecked(m, t))
}

#[inline]
pub(crate) fn kernel_v_unchecked(m: f64, t: f64) -> KernelValue {
    let HalfPlaneRoot { u, v, .. } = root_unchecked(m, t);
    let (s, c, guarded) = half_ratios(PI * u, PI * v);
    let (sv, cv) = (PI * v).sin_cos();
    KernelValue {
        value: (v * s * cv + u * c * sv) / (t * m.hypot(t)),
        overflow_guarded: guarded,
    }
}

/// The kernel G_{M,t,k}, i.e. `-2 Im[coth(π√(M+it)/√k) (M+it)^{-5/2}]`.
pub fn kernel_g(m: f64, t: f64, k: u64) -> Result<KernelValue> {
    check_t(t)?;
    if k == 0 {
        return domain("k must be at least 1");
    }
    if !m.is_finite() {
        return domain(format!("M must be finite, got {m}"));
    }
    Ok(kernel_g_unchecked(m, t, (k as f64).sqrt()))
}

#[inline]
pub(crate) fn kernel_g_unchecked(m: f64, t: f64, sqrt_k: f64) -> KernelValue {
    let HalfPlaneRoot { u, v, .. } = root_unchecked(m, t);
    let (a, b, guarded) = coth_ratios(PI * u / sqrt_k, PI * v / sqrt_k);
    let (m2, t2) = (m * m, t * t);
    let p = m2 * u - t2 * u - 2.0 * m * t * v;
    let q = 2.0 * m * t * u + m2 * v - t2 * v;
    let r2 = m2 + t2;
    KernelValue {
        value: (p * b + q * a) / (r2 * r2 * r2.sqrt()),
        overflow_guarded: guarded,
    }
}

/// |LHS − partial RHS| of the coth expansion
/// `1/(2x²) − π cosh(θx)/(2x sinh(πx)) = Σ (−1)^{k−1} cos(kθ)/(k²+x²)`.
pub fn mittag_leffler_residual(theta: f64, x: f64, n_terms: usize) -> Result<f64> {
    if !(theta.abs() <= PI) {
        return domain(format!("|theta| must not exceed pi, got {theta}"));
    }
    if x == 0.0 || !x.is_finite() {
        return domain("x must be finite and nonzero");
    }
    let ax = x.abs();
    // cosh(θx)/sinh(πx) with |θ| ≤ π stays bounded; use exponentials for large x.
    let ratio = if PI * ax <= GUARD {
        (theta * ax).cosh() / (PI * ax).sinh()
    } else {
        ((theta.abs() - PI) * ax).exp() * (1.0 + (-2.0 * theta.abs() * ax).exp())
            / (1.0 - (-2.0 * PI * ax).exp())
    };
    let lhs = 1.0 / (2.0 * x * x) - PI * ratio / (2.0 * ax);
    let mut acc = Neumaier::new();
    for k in 1..=n_terms {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc.add(sign * (kf * theta).cos() / (kf * kf + x * x));
    }
    Ok((lhs - acc.value()).abs())
}
