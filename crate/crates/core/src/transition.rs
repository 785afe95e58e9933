//! Heavy-traffic / heavy-tail transition thresholds.
//!
//! With `kappa = mu (alpha - 2)`, the heavy-traffic approximation holds up to
//! about `xhat(rho) = kappa (1-rho)^{-1} log((1-rho)^{-1})` and the heavy-tail
//! asymptotic takes over beyond it. A point `(rho, x)` is assigned the
//! implied `c = x (1-rho) / (kappa log((1-rho)^{-1}))`.

use serde::{Deserialize, Serialize};

use crate::approximations::{heavy_tail, heavy_traffic};
use crate::distributions::{IntegratedTailModel, QueueModel};
use crate::error::{domain, unsupported, Error, Result};

/// Default half-width of the band around `c = 1` classified as `Transition`.
pub const DEFAULT_BAND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    HeavyTraffic,
    Transition,
    HeavyTail,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::HeavyTraffic => "heavy-traffic",
            Regime::Transition => "transition",
            Regime::HeavyTail => "heavy-tail",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heavy-traffic" => Ok(Regime::HeavyTraffic),
            "transition" => Ok(Regime::Transition),
            "heavy-tail" => Ok(Regime::HeavyTail),
            other => Err(Error::Parse(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub c_value: f64,
    pub regime: Regime,
    /// `xhat(rho)` at `c = 1`.
    pub threshold_x: f64,
    pub kappa: f64,
}

/// Result of [`threshold_rho`]; `in_range` is false when the formula leaves (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoThreshold {
    pub rho: f64,
    pub in_range: bool,
}

/// `kappa = (alpha - 2) mu`.
pub fn kappa(model: &IntegratedTailModel) -> Result<f64> {
    let alpha = model.tail_index().ok_or_else(|| {
        unsupported(format!("the {} model has no tail index for transition thresholds", model.name()))
    })?;
    Ok((alpha - 2.0) * model.mean_integrated())
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("c must be positive, got {c}")))
    }
}

/// `y(rho) = c kappa (1-rho)^{-1} log((1-rho)^{-1})`.
pub fn threshold_x(q: &QueueModel, c: f64) -> Result<f64> {
    check_c(c)?;
    let k = kappa(q.model())?;
    let gap = 1.0 - q.rho();
    Ok(c * k / gap * -gap.ln())
}

/// `rhohat(x) = 1 - c kappa log(x) / x`.
pub fn threshold_rho(model: &IntegratedTailModel, x: f64, c: f64) -> Result<RhoThreshold> {
    check_c(c)?;
    if !(x > 1.0 && x.is_finite()) {
        return Err(domain(format!("threshold_rho needs x > 1, got {x}")));
    }
    let rho = 1.0 - c * kappa(model)? * x.ln() / x;
    Ok(RhoThreshold {
        rho,
        in_range: rho > 0.0 && rho < 1.0,
    })
}

/// Implied `c` of `(rho, x)` and its regime, with a band of half-width `band` around 1.
pub fn regime_classify_with_band(q: &QueueModel, x: f64, band: f64) -> Result<RegimeReport> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain(format!("x must be finite and >= 0, got {x}")));
    }
    if !(band >= 0.0 && band < 1.0) {
        return Err(domain(format!("band must lie in [0, 1), got {band}")));
    }
    let kappa = kappa(q.model())?;
    let gap = 1.0 - q.rho();
    let c_value = x * gap / (kappa * -gap.ln());
    let regime = if c_value < 1.0 - band {
        Regime::HeavyTraffic
    } else if c_value > 1.0 + band {
        Regime::HeavyTail
    } else {
        Regime::Transition
    };
    Ok(RegimeReport {
        c_value,
        regime,
        threshold_x: threshold_x(q, 1.0)?,
        kappa,
    })
}

pub fn regime_classify(q: &QueueModel, x: f64) -> Result<RegimeReport> {
    regime_classify_with_band(q, x, DEFAULT_BAND)
}

/// Largest `x >= 1` where the heavy-traffic and heavy-tail curves meet.
///
/// On `x >= 1` the log-difference `g(x) = log HT - log HTail` is concave with
/// its maximum at `(alpha-1) mu / (1-rho)`, so the largest root lies to the
/// right of that point and is found by bisection.
pub fn crossing_point(q: &QueueModel) -> Result<f64> {
    let alpha = q
        .model()
        .tail_index()
        .ok_or_else(|| unsupported("crossing_point needs a Pareto model"))?;
    let g = |x: f64| -> f64 {
        let ht = heavy_traffic(q, x).expect("x >= 1");
        let tail = heavy_tail(q, x).expect("x >= 1");
        ht.ln() - tail.ln()
    };
    let hi_limit = 1e9 * q.mu();
    let peak = ((alpha - 1.0) * q.mu() / (1.0 - q.rho())).clamp(1.0, hi_limit);
    if g(peak) < 0.0 || g(hi_limit) >= 0.0 {
        return Err(Error::NoCrossing {
            lo: 1.0,
            hi: hi_limit,
        });
    }
    let (mut lo, mut hi) = (peak, hi_limit);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
