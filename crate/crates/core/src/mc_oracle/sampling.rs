use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::QueueModel;
use crate::geom_sums::GeomModel;

pub type ReplicationRng = ChaCha8Rng;

/// The stream for replication `index` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ReplicationRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `P(N = n) = (1-rho) rho^n`, `n >= 0`, by inversion: `floor(ln U / ln rho)`.
pub(crate) fn draw_count<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.sample(Open01);
    (u.ln() / rho.ln()).floor() as u64
}

/// One exact draw of `W = X_1 + ... + X_N` with `P(N = n) = (1-rho) rho^n`.
pub fn compound_geometric_sample<R: Rng + ?Sized>(q: &QueueModel, rng: &mut R) -> f64 {
    let n = draw_count(q.rho(), rng);
    let model = q.model();
    (0..n)
        .map(|_| model.quantile_unchecked(rng.sample(Open01)))
        .sum()
}

/// One draw of `Z(p) = Y_1 + ... + Y_N` with `P(N = k) = p (1-p)^{k-1}`, `k >= 1`.
pub fn geom_compound_sample<R: Rng + ?Sized>(g: &GeomModel, rng: &mut R) -> f64 {
    let n = 1 + draw_count(1.0 - g.p(), rng);
    let model = g.summand();
    (0..n)
        .map(|_| model.quantile_unchecked(rng.sample(Open01)))
        .sum()
}
