use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::QueueModel;
use crate::error::{domain, Result};
use crate::geom_sums::GeomModel;
use crate::normal;

use super::sampling::{compound_geometric_sample, draw_count, geom_compound_sample, replication_rng};
use super::stats::RunningMoments;

/// Replications per parallel work unit. Fixed so that the merge order, and
/// hence every floating-point result, does not depend on the thread count.
const CHUNK: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Crude,
    AsmussenKroese,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Crude => "crude",
            Method::AsmussenKroese => "asmussen-kroese",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationEstimate {
    pub estimate: f64,
    /// Normal-approximation half-width at `confidence`.
    pub half_width: f64,
    /// `half_width / estimate` (infinite when the estimate is 0).
    pub rel_err: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub method: Method,
    pub confidence: f64,
    /// False when `max_samples` ran out before the target relative error.
    pub converged: bool,
}

impl SimulationEstimate {
    fn from_moments(
        m: &RunningMoments,
        z: f64,
        seed: u64,
        method: Method,
        confidence: f64,
        converged: bool,
    ) -> Self {
        let half_width = z * m.std_error();
        let rel_err = if m.mean > 0.0 {
            half_width / m.mean
        } else {
            f64::INFINITY
        };
        Self {
            estimate: m.mean,
            half_width,
            rel_err,
            n_samples: m.count,
            seed,
            method,
            confidence,
            converged,
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= self.half_width
    }
}

fn two_sided_z(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(domain(format!("confidence must lie in (0,1), got {confidence}")));
    }
    Ok(normal::quantile(0.5 + 0.5 * confidence))
}

/// Moments of `f(index)` over `start..start+count`, merged in index order.
fn replicate<F>(start: u64, count: u64, f: F) -> RunningMoments
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<RunningMoments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(start + count);
            let mut m = RunningMoments::default();
            for i in lo..hi {
                m.push(f(i));
            }
            m
        })
        .collect();
    let mut total = RunningMoments::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Crude estimate of `P(W > x)` from `n_samples` compound-geometric draws.
pub fn crude_mc(q: &QueueModel, x: f64, n_samples: u64, seed: u64) -> Result<SimulationEstimate> {
    if n_samples < 100 {
        return Err(domain(format!("crude_mc needs at least 100 samples, got {n_samples}")));
    }
    let z = two_sided_z(0.99)?;
    let m = replicate(0, n_samples, |i| {
        let mut rng = replication_rng(seed, i);
        f64::from(u8::from(compound_geometric_sample(q, &mut rng) > x))
    });
    Ok(SimulationEstimate::from_moments(&m, z, seed, Method::Crude, 0.99, true))
}

/// Crude estimate of `P(Z(p) > x)` for a geometric random sum.
pub fn crude_geom_mc(g: &GeomModel, x: f64, n_samples: u64, seed: u64) -> Result<SimulationEstimate> {
    if n_samples < 100 {
        return Err(domain(format!("crude_geom_mc needs at least 100 samples, got {n_samples}")));
    }
    let z = two_sided_z(0.99)?;
    let m = replicate(0, n_samples, |i| {
        let mut rng = replication_rng(seed, i);
        f64::from(u8::from(geom_compound_sample(g, &mut rng) > x))
    });
    Ok(SimulationEstimate::from_moments(&m, z, seed, Method::Crude, 0.99, true))
}

/// One conditional replication for `P(W > x)`.
///
/// Draw `N`; for `N = n >= 1` draw `X_1..X_{n-1}` with maximum `M` and sum
/// `S` and return `n P(X > max(M, x - S))`. On lattice models ties with `M`
/// have positive probability; with a uniformly random tie-break the fresh
/// draw is the designated maximum with probability `1/(k+1)` when it equals
/// `M` (`k` = earlier draws equal to `M`), which adds
/// `n 1{M > x - S} P(X = M) / (k+1)` and keeps the estimator unbiased.
pub fn ak_replication<R: Rng + ?Sized>(q: &QueueModel, x: f64, rng: &mut R) -> f64 {
    let n = draw_count(q.rho(), rng);
    if n == 0 {
        return 0.0;
    }
    let model = q.model();
    let mut max = 0.0f64;
    let mut ties = 0u64;
    let mut sum = 0.0;
    for _ in 1..n {
        let v = model.quantile_unchecked(rng.sample(Open01));
        sum += v;
        if v > max {
            max = v;
            ties = 1;
        } else if v == max {
            ties += 1;
        }
    }
    let residual = x - sum;
    let mut p = model.tail_unchecked(max.max(residual));
    if n > 1 && model.is_lattice() && max > residual {
        p += model.atom_prob(max) / (ties + 1) as f64;
    }
    n as f64 * p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AkOptions {
    pub target_rel_err: f64,
    pub confidence: f64,
    pub max_samples: u64,
    /// Replications before the first stopping check.
    pub min_samples: u64,
    /// Replications between stopping checks.
    pub batch: u64,
}

impl Default for AkOptions {
    fn default() -> Self {
        Self {
            target_rel_err: 0.05,
            confidence: 0.99,
            max_samples: 50_000_000,
            min_samples: 100_000,
            batch: 10_000,
        }
    }
}

/// Asmussen-Kroese conditional Monte Carlo for `P(W > x)`, run until the
/// confidence half-width is at most `target_rel_err * estimate`.
pub fn ak_estimate(q: &QueueModel, x: f64, opts: &AkOptions, seed: u64) -> Result<SimulationEstimate> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain(format!("x must be finite and >= 0, got {x}")));
    }
    if !(opts.target_rel_err > 0.0) {
        return Err(domain("target_rel_err must be positive"));
    }
    if opts.batch == 0 || opts.max_samples == 0 {
        return Err(domain("batch and max_samples must be positive"));
    }
    let z = two_sided_z(opts.confidence)?;
    let draw = |i: u64| {
        let mut rng = replication_rng(seed, i);
        ak_replication(q, x, &mut rng)
    };
    let first = opts.min_samples.max(opts.batch).min(opts.max_samples);
    let mut m = replicate(0, first, draw);
    loop {
        let hw = z * m.std_error();
        if m.mean > 0.0 && hw <= opts.target_rel_err * m.mean {
            return Ok(SimulationEstimate::from_moments(
                &m,
                z,
                seed,
                Method::AsmussenKroese,
                opts.confidence,
                true,
            ));
        }
        if m.count >= opts.max_samples {
            return Ok(SimulationEstimate::from_moments(
                &m,
                z,
                seed,
                Method::AsmussenKroese,
                opts.confidence,
                false,
            ));
        }
        let next = opts.batch.min(opts.max_samples - m.count);
        m.merge(&replicate(m.count, next, draw));
    }
}
