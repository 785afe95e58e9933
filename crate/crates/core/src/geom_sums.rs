//! Geometric random sums `Z(p) = Y_1 + ... + Y_N`, `P(N = k) = p (1-p)^{k-1}`
//! for `k >= 1`, with regularly varying summands of tail index `beta_y > 2`.
//!
//! The uniform approximation mirrors the M/G/1 one under `rho = 1 - p`:
//! `(1-p) gamma(x,p) P(Y > x) / p + (1-p)^{x/mu}` with
//! `gamma(x,p) = 1 - (1-p)^{x/mu} - (1-p)^{x/mu} p x/mu`.

use serde::{Deserialize, Serialize};

use crate::distributions::IntegratedTailModel;
use crate::error::{domain, unsupported, Result};
use crate::numeric::BELOW_ONE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeomModel {
    summand: IntegratedTailModel,
    p: f64,
    beta_y: f64,
    tau: f64,
}

impl GeomModel {
    /// `summand` must be a Pareto-type model whose tail `P(Y > x)` has index
    /// `beta_y = alpha - 1 > 2`.
    pub fn new(summand: IntegratedTailModel, p: f64) -> Result<Self> {
        summand.validate()?;
        let alpha = match &summand {
            IntegratedTailModel::ParetoIntegratedTail { alpha } => *alpha,
            IntegratedTailModel::Lattice(_) => {
                return Err(unsupported("geometric sums need nonlattice summands"))
            }
            other => {
                return Err(unsupported(format!(
                    "geometric sums need a regularly varying summand, got {}",
                    other.name()
                )))
            }
        };
        let beta_y = alpha - 1.0;
        if beta_y <= 2.0 {
            return Err(domain(format!("summand tail index must exceed 2, got {beta_y}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("p must lie strictly inside (0,1), got {p}")));
        }
        let tau = (beta_y - 1.0) * summand.mean_integrated();
        Ok(Self {
            summand,
            p,
            beta_y,
            tau,
        })
    }

    /// Standard Pareto summands, `P(Y > x) = x^{-beta_y}` for `x >= 1`.
    pub fn pareto(beta_y: f64, p: f64) -> Result<Self> {
        Self::new(IntegratedTailModel::ParetoIntegratedTail { alpha: beta_y + 1.0 }, p)
    }

    pub fn summand(&self) -> &IntegratedTailModel {
        &self.summand
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta_y(&self) -> f64 {
        self.beta_y
    }

    pub fn mu_y(&self) -> f64 {
        self.summand.mean_integrated()
    }

    /// `tau = (beta_y - 1) E Y`.
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("x must be finite and >= 0, got {x}")))
    }
}

pub fn geom_gamma(g: &GeomModel, x: f64) -> Result<f64> {
    check_x(x)?;
    let q = 1.0 - g.p;
    let steps = x / g.mu_y();
    let s = -q.ln() * steps;
    let t = g.p * steps;
    let e = (-s).exp();
    let v = if s < 1.0 { e * (s.exp_m1() - t) } else { 1.0 - e - e * t };
    Ok(v.clamp(0.0, BELOW_ONE))
}

pub fn geom_tail_approx(g: &GeomModel, x: f64) -> Result<f64> {
    let gamma = geom_gamma(g, x)?;
    let q = 1.0 - g.p;
    let tail = g.summand.tail_prob(x)?;
    Ok(q * gamma * tail / g.p + (x / g.mu_y() * q.ln()).exp())
}

/// `y(p) = c tau p^{-1} log(1/p)`.
pub fn geom_threshold(g: &GeomModel, c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(domain(format!("c must be positive, got {c}")));
    }
    Ok(c * g.tau / g.p * -g.p.ln())
}
