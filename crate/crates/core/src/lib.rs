//! Tail probabilities of the steady-state M/G/1 waiting time with regularly
//! varying service times.
//!
//! The crate evaluates the heavy-traffic and heavy-tail approximations, the
//! uniform approximations `H` and `J` built from the Pollaczek-Khintchine
//! series, their CLT-corrected variants, the transition thresholds between
//! the two regimes, light-tailed comparison formulas and the analogous
//! results for geometric random sums. Exact lattice convolution and
//! conditional Monte Carlo provide the ground truth the approximations are
//! checked against.

pub mod approximations;
pub mod distributions;
pub mod error;
pub mod geom_sums;
pub mod light_tails;
pub mod mc_oracle;
pub mod normal;
pub mod numeric;
pub mod sweep;
pub mod transition;

pub use approximations::ApproximationPoint;
pub use distributions::{
    parse_model, Bracket, IntegratedTailModel, Lattice, QueueModel, ServiceMoments, Variance,
};
pub use error::{Error, Result};
pub use geom_sums::GeomModel;
pub use light_tails::AdjustmentCoefficient;
pub use mc_oracle::{AkOptions, Method, PkExact, PkOptions, SimulationEstimate};
pub use sweep::{SweepRow, SweepTable};
pub use transition::{Regime, RegimeReport};
