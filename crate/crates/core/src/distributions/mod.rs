//! Integrated-tail models for the summands of the Pollaczek-Khintchine
//! series, plus the queue model that pairs one with a traffic intensity.
//!
//! The heavy-tailed built-in specifies X directly through its tail
//! `P(X > x) = x^{-(alpha-1)}` for `x >= 1` (and 1 below), where `alpha` is the
//! tail index of the service time V. Slowly varying factors are fixed to 1.

mod lattice;
mod spec;

pub use lattice::{Bracket, Lattice};
pub use spec::parse_model;

use serde::{Deserialize, Serialize};

use crate::error::{domain, unsupported, Result};

/// Law of the integrated-tail summand X.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegratedTailModel {
    /// `P(X > x) = min(1, x^{-(alpha-1)})`, requires `alpha > 2`.
    ParetoIntegratedTail { alpha: f64 },
    /// `P(X > x) = exp(-rate x)`: the integrated tail of Exp(rate) service.
    ExponentialIntegrated { rate: f64 },
    /// Exact lattice law, used as computable ground truth.
    Lattice(Lattice),
}

/// Variance of X, which is infinite for `2 < alpha <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Variance {
    Finite(f64),
    Infinite,
}

impl Variance {
    pub fn finite(self) -> Option<f64> {
        match self {
            Variance::Finite(v) => Some(v),
            Variance::Infinite => None,
        }
    }
}

/// Raw moments of the service time V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceMoments {
    pub ev1: f64,
    pub ev2: f64,
    pub ev3: Option<f64>,
}

impl ServiceMoments {
    /// Mean of the integrated tail, `E V^2 / (2 E V)`.
    pub fn integrated_mean(&self) -> f64 {
        self.ev2 / (2.0 * self.ev1)
    }
}

impl IntegratedTailModel {
    pub fn pareto(alpha: f64) -> Result<Self> {
        let m = IntegratedTailModel::ParetoIntegratedTail { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let m = IntegratedTailModel::ExponentialIntegrated { rate };
        m.validate()?;
        Ok(m)
    }

    pub fn lattice(lattice: Lattice) -> Self {
        IntegratedTailModel::Lattice(lattice)
    }

    /// Checks parameter ranges; the variants have public fields, so models
    /// built by hand are re-checked wherever they enter a `QueueModel`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            IntegratedTailModel::ParetoIntegratedTail { alpha } => {
                if !(alpha.is_finite() && alpha > 2.0) {
                    return Err(domain(format!("pareto-it needs alpha > 2, got {alpha}")));
                }
            }
            IntegratedTailModel::ExponentialIntegrated { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(domain(format!("exp needs rate > 0, got {rate}")));
                }
            }
            // Lattice invariants are enforced by its constructor.
            IntegratedTailModel::Lattice(_) => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntegratedTailModel::ParetoIntegratedTail { .. } => "pareto-it",
            IntegratedTailModel::ExponentialIntegrated { .. } => "exp",
            IntegratedTailModel::Lattice(_) => "lattice",
        }
    }

    /// `P(X > x)`.
    pub fn tail_prob(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain(format!("tail_prob needs x >= 0, got {x}")));
        }
        Ok(self.tail_unchecked(x))
    }

    /// `P(X > x)` without argument checks; negative `x` gives 1.
    #[inline]
    pub(crate) fn tail_unchecked(&self, x: f64) -> f64 {
        match self {
            IntegratedTailModel::ParetoIntegratedTail { alpha } => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(1.0 - alpha)
                }
            }
            IntegratedTailModel::ExponentialIntegrated { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            IntegratedTailModel::Lattice(l) => l.tail_prob(x),
        }
    }

    /// `P(X = x)`; zero except at lattice points.
    pub fn atom_prob(&self, x: f64) -> f64 {
        match self {
            IntegratedTailModel::Lattice(l) => l.atom_prob(x),
            _ => 0.0,
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, IntegratedTailModel::Lattice(_))
    }

    /// `mu = E X`.
    pub fn mean_integrated(&self) -> f64 {
        match self {
            IntegratedTailModel::ParetoIntegratedTail { alpha } => (alpha - 1.0) / (alpha - 2.0),
            IntegratedTailModel::ExponentialIntegrated { rate } => 1.0 / rate,
            IntegratedTailModel::Lattice(l) => l.mean(),
        }
    }

    pub fn variance_integrated(&self) -> Variance {
        match self {
            IntegratedTailModel::ParetoIntegratedTail { alpha } => {
                if *alpha <= 3.0 {
                    Variance::Infinite
                } else {
                    // E X^2 = 2 int_0^inf t P(X>t) dt = 1 + 2/(alpha-3)
                    let m2 = 1.0 + 2.0 / (alpha - 3.0);
                    let mu = self.mean_integrated();
                    Variance::Finite(m2 - mu * mu)
                }
            }
            IntegratedTailModel::ExponentialIntegrated { rate } => Variance::Finite(1.0 / (rate * rate)),
            IntegratedTailModel::Lattice(l) => Variance::Finite(l.variance()),
        }
    }

    /// The `u`-quantile of X, `u` in (0, 1).
    pub fn sample_x(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(domain(format!("sample_x needs u in (0,1), got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self {
            IntegratedTailModel::ParetoIntegratedTail { alpha } => (1.0 - u).powf(-1.0 / (alpha - 1.0)),
            IntegratedTailModel::ExponentialIntegrated { rate } => -(-u).ln_1p() / rate,
            IntegratedTailModel::Lattice(l) => l.quantile(u),
        }
    }

    /// Moments of the underlying service time V. Only the exponential model
    /// identifies them: an integrated tail alone does not pin down V.
    pub fn service_moments(&self) -> Result<ServiceMoments> {
        match self {
            IntegratedTailModel::ExponentialIntegrated { rate } => Ok(ServiceMoments {
                ev1: 1.0 / rate,
                ev2: 2.0 / (rate * rate),
                ev3: Some(6.0 / (rate * rate * rate)),
            }),
            other => Err(unsupported(format!(
                "service moments are not identified for the {} model",
                other.name()
            ))),
        }
    }

    /// Tail index alpha of the service time, when the model has one.
    pub fn tail_index(&self) -> Option<f64> {
        match self {
            IntegratedTailModel::ParetoIntegratedTail { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Exponent in `M(x) = floor((x - x^beta)/mu)`: `1/min(2, alpha-1)`,
    /// and 1/2 for light-tailed models (alpha = infinity).
    pub fn beta_exponent(&self) -> f64 {
        match self.tail_index() {
            Some(alpha) => 1.0 / (alpha - 1.0).min(2.0),
            None => 0.5,
        }
    }
}

/// An integrated-tail model together with a traffic intensity in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    model: IntegratedTailModel,
    rho: f64,
}

impl QueueModel {
    pub fn new(model: IntegratedTailModel, rho: f64) -> Result<Self> {
        model.validate()?;
        if !(rho > 0.0 && rho < 1.0) {
            return Err(domain(format!("rho must lie strictly inside (0,1), got {rho}")));
        }
        Ok(Self { model, rho })
    }

    pub fn model(&self) -> &IntegratedTailModel {
        &self.model
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `mu = E X_1`.
    pub fn mu(&self) -> f64 {
        self.model.mean_integrated()
    }

    /// Poisson arrival rate `rho / E V`, defined when service moments are.
    pub fn arrival_rate(&self) -> Option<f64> {
        self.model.service_moments().ok().map(|m| self.rho / m.ev1)
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.model.clone(), rho)
    }
}
