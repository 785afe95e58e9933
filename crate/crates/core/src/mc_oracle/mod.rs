//! Ground truth for the approximations: exact lattice convolution of the
//! Pollaczek-Khintchine series, crude compound-geometric Monte Carlo, and the
//! Asmussen-Kroese conditional estimator with a relative-error stopping rule.
//!
//! Every replication draws from its own ChaCha8 stream (stream id = the
//! replication index under the run seed), and per-chunk statistics are merged
//! in index order, so estimates are bit-identical for a given seed no matter
//! how work is spread across threads.

mod convolution;
mod estimators;
mod sampling;
mod stats;

pub use convolution::{
    convolve_tail, convolve_tail_curve, pk_depth, pk_truncated, pk_truncated_curve,
    ConvolutionBudget, PkCurve, PkExact, PkOptions,
};
pub use estimators::{
    ak_estimate, ak_replication, crude_geom_mc, crude_mc, AkOptions, Method, SimulationEstimate,
};
pub use sampling::{compound_geometric_sample, geom_compound_sample, replication_rng, ReplicationRng};
pub use stats::RunningMoments;
