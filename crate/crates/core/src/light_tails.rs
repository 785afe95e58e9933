//! Light-tailed comparison formulas: the Cramer-Lundberg adjustment
//! coefficient, its exponential tail, and the heavy-traffic approximation
//! corrected at scale `(1-rho)^{-2}`.
//!
//! Only the exponential built-in has a finite moment generating function,
//! `E exp(theta V) = nu / (nu - theta)` for `theta < nu`.

use serde::{Deserialize, Serialize};

use crate::distributions::{IntegratedTailModel, QueueModel};
use crate::error::{domain, unsupported, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentCoefficient {
    pub theta_star: f64,
    pub rho: f64,
    /// `|rho E exp(theta* V) - 1|` at the returned root.
    pub residual: f64,
}

/// MGF of the service time and its abscissa of convergence.
struct ServiceMgf {
    rate: f64,
}

impl ServiceMgf {
    fn for_model(model: &IntegratedTailModel) -> Result<Self> {
        match model {
            IntegratedTailModel::ExponentialIntegrated { rate } => Ok(Self { rate: *rate }),
            other => Err(unsupported(format!(
                "the {} model has no finite service MGF on theta > 0",
                other.name()
            ))),
        }
    }

    fn sup(&self) -> f64 {
        self.rate
    }

    fn eval(&self, theta: f64) -> f64 {
        self.rate / (self.rate - theta)
    }
}

/// Root `theta*` of `rho E exp(theta V) = 1`, by bisection on `(0, theta_sup)`.
pub fn adjustment_coefficient(q: &QueueModel) -> Result<AdjustmentCoefficient> {
    let mgf = ServiceMgf::for_model(q.model())?;
    let rho = q.rho();
    let f = |t: f64| rho * mgf.eval(t) - 1.0;
    // f(0) = rho - 1 < 0 and f -> +inf at the abscissa
    let (mut lo, mut hi) = (0.0, mgf.sup());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta_star = if f(hi).abs() < f(lo).abs() { hi } else { lo };
    Ok(AdjustmentCoefficient {
        theta_star,
        rho,
        residual: f(theta_star).abs(),
    })
}

/// `exp(-theta* x)`.
pub fn cramer_lundberg_tail(q: &QueueModel, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain(format!("x must be finite and >= 0, got {x}")));
    }
    Ok((-adjustment_coefficient(q)?.theta_star * x).exp())
}

/// Tail at `x_scaled (1-rho)^{-2}`:
/// `exp(-2 x (1-rho)^{-1} EV/EV^2 + x EV^3/(3 EV^2) - (x/4) EV^2/EV)`.
pub fn corrected_heavy_traffic(q: &QueueModel, x_scaled: f64) -> Result<f64> {
    if !(x_scaled >= 0.0 && x_scaled.is_finite()) {
        return Err(domain(format!("x_scaled must be finite and >= 0, got {x_scaled}")));
    }
    let m = q.model().service_moments()?;
    let ev3 = m
        .ev3
        .ok_or_else(|| unsupported("corrected heavy traffic needs E V^3"))?;
    let x = x_scaled;
    let exponent =
        -2.0 * x / (1.0 - q.rho()) * m.ev1 / m.ev2 + x * ev3 / (3.0 * m.ev2) - x / 4.0 * m.ev2 / m.ev1;
    Ok(exponent.exp())
}
