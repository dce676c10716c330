use log::warn;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::spectrum::BoundaryGeometry;

/// Sample counts above this are reported but not simulated.
pub const SIMULABLE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinTail {
    /// `k exp(-(ν²/2) / (σ² + Bν/3))`.
    pub raw: f64,
    /// `k exp(-α² m / (10 k C²))`.
    pub simplified: f64,
    pub nu: f64,
    pub sigma2: f64,
    pub bound_b: f64,
}

/// Matrix Bernstein bound on `P(‖T - mI‖ ≥ mα/2)` at a single fiber.
pub fn bernstein_tail(k: usize, m: usize, c: f64, alpha: f64) -> Result<BernsteinTail> {
    check_k(k)?;
    if m == 0 {
        return Err(invalid("m", "need at least one sample point"));
    }
    check_c(c)?;
    check_alpha(alpha)?;
    let kf = k as f64;
    let mf = m as f64;
    let kc2 = kf * c * c;
    let nu = mf * alpha / 2.0;
    let sigma2 = (mf * (kc2 - 1.0)).max(0.0);
    let bound_b = kc2 + 1.0;
    let raw = kf * (-(nu * nu / 2.0) / (sigma2 + bound_b * nu / 3.0)).exp();
    let simplified = kf * (-alpha * alpha * mf / (10.0 * kc2)).exp();
    Ok(BernsteinTail {
        raw,
        simplified,
        nu,
        sigma2,
        bound_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleCount {
    pub m: u64,
    /// Value before rounding up.
    pub raw: f64,
    /// Argument of the logarithm.
    pub log_argument: f64,
    /// Set when the log argument was at most 1 and `m` was raised to 1.
    pub clamped: bool,
    pub formula: &'static str,
}

/// `⌈10 (C²/α²) k ln((2k/ε)(2kCK/α + 1)^d)⌉`.
pub fn sample_count_thm1(
    k: usize,
    c: f64,
    lipschitz: f64,
    dim: usize,
    alpha: f64,
    eps: f64,
) -> Result<SampleCount> {
    check_k(k)?;
    check_c(c)?;
    if !(lipschitz.is_finite() && lipschitz >= 0.0) {
        return Err(invalid("K", format!("must be nonnegative, got {lipschitz}")));
    }
    if dim == 0 {
        return Err(invalid("dim", "ambient dimension must be at least 1"));
    }
    check_alpha(alpha)?;
    check_eps(eps)?;
    let kf = k as f64;
    let net = 2.0 * kf * c * lipschitz / alpha + 1.0;
    // ln of the product, summed to stay finite for large d
    let log = (2.0 * kf / eps).ln() + dim as f64 * net.ln();
    Ok(finish(10.0 * c * c / (alpha * alpha) * kf, log, "thm1"))
}

/// `⌈(10/α²) k ln(2k/ε)⌉`, the indicator case `C = 1`, `K = 0`.
pub fn sample_count_cor2(k: usize, alpha: f64, eps: f64) -> Result<SampleCount> {
    let mut s = sample_count_thm1(k, 1.0, 0.0, 1, alpha, eps)?;
    s.formula = "cor2";
    Ok(s)
}

/// `⌈(10/α²) k ln(2 N k/ε)⌉` for a level-`k` multi-tile with complexity index `N`.
pub fn sample_count_ktile(k: usize, complexity: usize, alpha: f64, eps: f64) -> Result<SampleCount> {
    check_k(k)?;
    if complexity == 0 {
        return Err(invalid("N", "complexity index must be at least 1"));
    }
    check_alpha(alpha)?;
    check_eps(eps)?;
    let kf = k as f64;
    let log = (2.0 * complexity as f64 * kf / eps).ln();
    Ok(finish(10.0 / (alpha * alpha) * kf, log, "ktile"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralSampleCount {
    pub rho: f64,
    /// `|Ω| / ρ^d`.
    pub tiles_ratio: f64,
    pub m_real: f64,
    /// Saturates at `u64::MAX`.
    pub m: u64,
    pub simulable: bool,
    pub clamped: bool,
}

/// `⌈(20/α²) R ln(4R/ε)⌉` with `R = |Ω|/ρ^d`.
pub fn sample_count_general(geom: &BoundaryGeometry, alpha: f64, eps: f64) -> Result<GeneralSampleCount> {
    check_alpha(alpha)?;
    check_eps(eps)?;
    let rho = geom.rho();
    let ratio = geom.volume / rho.powi(geom.dim as i32);
    let s = finish(20.0 / (alpha * alpha) * ratio, (4.0 * ratio / eps).ln(), "general");
    let simulable = s.m <= SIMULABLE_LIMIT;
    if !simulable {
        warn!("general sample count {} is beyond simulation (limit {SIMULABLE_LIMIT})", s.raw);
    }
    Ok(GeneralSampleCount {
        rho,
        tiles_ratio: ratio,
        m_real: s.raw,
        m: s.m,
        simulable,
        clamped: s.clamped,
    })
}

fn finish(factor: f64, log: f64, formula: &'static str) -> SampleCount {
    let raw = factor * log;
    let log_argument = log.exp();
    if log <= 0.0 {
        warn!("{formula}: log argument {log_argument} is at most 1, using m = 1");
        return SampleCount {
            m: 1,
            raw,
            log_argument,
            clamped: true,
            formula,
        };
    }
    let m = raw.ceil();
    SampleCount {
        m: if m >= u64::MAX as f64 { u64::MAX } else { (m as u64).max(1) },
        raw,
        log_argument,
        clamped: false,
        formula,
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k", "need at least one generator"));
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid("C", format!("must be positive, got {c}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid("epsilon", format!("must be positive, got {eps}")));
    }
    Ok(())
}
