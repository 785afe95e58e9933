//! Closed-form approximations of `P(W > x)` for the M/G/1 waiting time.
//!
//! Notation: `mu = E X_1`, `rho` the traffic intensity, `Fbar(x) = P(X_1 > x)`.
//!
//! * heavy traffic: `exp(-(1-rho) x / mu)`
//! * heavy tail: `rho/(1-rho) Fbar(x)`
//! * `H = S + rho^{x/mu}` with `S = sum_{n=1}^{M(x)} (1-rho) rho^n n Fbar(x-(n-1)mu)`
//!   and `M(x) = floor((x - x^beta)/mu)`, `beta = 1/min(2, alpha-1)`
//! * `J = rho/(1-rho) gamma Fbar(x) + rho^{x/mu}`,
//!   `gamma = 1 - rho^{x/mu} - rho^{x/mu}(1-rho)x/mu`
//! * `T = sum_{n>=1} (1-rho) rho^n (1 - Phi((x - n mu)/sqrt(sigma^2 n)))`, the
//!   CLT replacement for `rho^{x/mu}`, and `H_clt = S + T`.

use serde::{Deserialize, Serialize};

use crate::distributions::{IntegratedTailModel, QueueModel};
use crate::error::{domain, unsupported, Result};
use crate::normal;
use crate::numeric::{pow_rho, CompensatedSum, BELOW_ONE};

/// Series terms below this are dropped.
const NEGLIGIBLE: f64 = 1e-300;

/// `t_tail` stops at the smallest `N` with `rho^{N+1}` below this.
pub const T_TAIL_TRUNCATION: f64 = 1e-12;

/// Half-width of the z-window integrated by `t_tail_z`.
pub const T_TAIL_Z_WINDOW: f64 = 10.0;
/// Number of equal panels the z-window is split into before step breakpoints are added.
pub const T_TAIL_Z_PANELS: usize = 40;
/// Gauss-Legendre order used on each subinterval.
pub const T_TAIL_Z_ORDER: usize = 10;

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("x must be finite and >= 0, got {x}")))
    }
}

fn finite_sigma(q: &QueueModel) -> Result<f64> {
    q.model().variance_integrated().finite().map(f64::sqrt).ok_or_else(|| {
        unsupported(
            "the CLT correction needs var(X_1) < infinity (alpha > 3); \
             no stable-law counterpart is implemented",
        )
    })
}

/// `rho^{x/mu}`, the geometric term shared by H and J.
pub fn geometric_term(q: &QueueModel, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(pow_rho(q.rho(), x / q.mu()))
}

pub fn heavy_traffic(q: &QueueModel, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok((-(1.0 - q.rho()) * x / q.mu()).exp())
}

/// `rho/(1-rho) P(X_1 > x)`. An asymptotic, so it may exceed 1 at small `x`.
pub fn heavy_tail(q: &QueueModel, x: f64) -> Result<f64> {
    check_x(x)?;
    let rho = q.rho();
    Ok(rho / (1.0 - rho) * q.model().tail_unchecked(x))
}

/// `M(x) = max(0, floor((x - x^beta)/mu))`.
pub fn big_m(q: &QueueModel, x: f64) -> Result<u64> {
    check_x(x)?;
    let beta = q.model().beta_exponent();
    let m = ((x - x.powf(beta)) / q.mu()).floor();
    Ok(if m > 0.0 { m as u64 } else { 0 })
}

/// `S(rho, x)`, summed in ascending `n` with compensation.
pub fn s_sum(q: &QueueModel, x: f64) -> Result<f64> {
    let m = big_m(q, x)?;
    let (rho, mu) = (q.rho(), q.mu());
    let model = q.model();
    let log_rho = rho.ln();
    // terms decrease once n exceeds the mode of n rho^n
    let mode = 1.0 / -log_rho;
    let mut acc = CompensatedSum::new();
    for n in 1..=m {
        let nf = n as f64;
        let weight = (1.0 - rho) * (nf * log_rho).exp() * nf;
        if weight < NEGLIGIBLE {
            if nf > mode {
                break;
            }
            continue;
        }
        let term = weight * model.tail_unchecked(x - (nf - 1.0) * mu);
        if term >= NEGLIGIBLE {
            acc.add(term);
        }
    }
    Ok(acc.value())
}

pub fn h_approx(q: &QueueModel, x: f64) -> Result<f64> {
    Ok(s_sum(q, x)? + geometric_term(q, x)?)
}

/// `gamma(x, rho) = 1 - rho^{x/mu} - rho^{x/mu} (1-rho) x/mu`, in `[0, 1)`.
pub fn gamma_factor(q: &QueueModel, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(gamma_expr(q.rho(), x / q.mu()))
}

/// Shared algebra: with `s = -ln(rho) x/mu` and `t = (1-rho) x/mu`,
/// `gamma = e^{-s}(e^s - 1 - t)`. Since `t <= s` this is nonnegative; the
/// small-`s` branch avoids cancellation.
pub(crate) fn gamma_expr(rho: f64, steps: f64) -> f64 {
    let s = -rho.ln() * steps;
    let t = (1.0 - rho) * steps;
    let g = if s < 1.0 {
        (-s).exp() * (s.exp_m1() - t)
    } else {
        let e = (-s).exp();
        1.0 - e - e * t
    };
    g.clamp(0.0, BELOW_ONE)
}

pub fn j_approx(q: &QueueModel, x: f64) -> Result<f64> {
    let rho = q.rho();
    let gamma = gamma_factor(q, x)?;
    Ok(rho / (1.0 - rho) * gamma * q.model().tail_unchecked(x) + geometric_term(q, x)?)
}

/// Number of `t_tail` terms: smallest `N` with `rho^{N+1} < T_TAIL_TRUNCATION`.
pub fn t_tail_depth(rho: f64) -> u64 {
    let n = (T_TAIL_TRUNCATION.ln() / rho.ln()).floor() as u64;
    // smallest N with (N+1) ln rho < ln tol
    let mut n = n.saturating_sub(1);
    while pow_rho(rho, (n + 1) as f64) >= T_TAIL_TRUNCATION {
        n += 1;
    }
    n
}

/// `T(rho, x)`, truncated per [`t_tail_depth`].
pub fn t_tail(q: &QueueModel, x: f64) -> Result<f64> {
    t_tail_truncated(q, x, t_tail_depth(q.rho()))
}

/// `T(rho, x)` summed over `n = 1..=depth`.
///
/// Once `n` passes `x/mu` and `1 - Phi` has saturated to exactly 1 in double
/// precision, the remaining terms are summed in closed form
/// (`sum_{n>K} (1-rho) rho^n = rho^{K+1}`), so depth only costs `O(x/mu)` work.
pub fn t_tail_truncated(q: &QueueModel, x: f64, depth: u64) -> Result<f64> {
    check_x(x)?;
    let sigma = finite_sigma(q)?;
    let (rho, mu) = (q.rho(), q.mu());
    let log_rho = rho.ln();
    let mut acc = CompensatedSum::new();
    let mut n = 1u64;
    while n <= depth {
        let nf = n as f64;
        let z = (x - nf * mu) / (sigma * nf.sqrt());
        let upper = normal::sf(z);
        if upper == 1.0 && nf * mu > x {
            let head = (nf * log_rho).exp();
            let tail = ((depth + 1) as f64 * log_rho).exp();
            acc.add(head - tail);
            break;
        }
        let term = (1.0 - rho) * (nf * log_rho).exp() * upper;
        if term >= NEGLIGIBLE {
            acc.add(term);
        }
        n += 1;
    }
    Ok(acc.value())
}

/// `M(x, z) = floor((sqrt(x/mu + (sigma z)^2/(2mu)^2) - sigma z/(2mu))^2)`.
pub fn big_m_z(mu: f64, sigma: f64, x: f64, z: f64) -> u64 {
    let b = sigma * z / (2.0 * mu);
    let r = ((x / mu + b * b).sqrt() - b).powi(2);
    r.floor() as u64
}

/// `T(rho, x)` as the normal expectation `E[rho^{M(x,Z)+1}]`, by quadrature.
///
/// `M(x, z)` is a nonincreasing step function of `z` that drops at
/// `z_n = (x - n mu)/(sigma sqrt n)`. The window `[-10, 10]` is split into
/// `T_TAIL_Z_PANELS` equal panels and additionally at every `z_n` inside it;
/// each piece gets a `T_TAIL_Z_ORDER`-point Gauss-Legendre rule for the
/// normal density, with the step value read off `M` at the piece midpoint.
/// Mass outside the window (about 1.5e-23) is ignored.
pub fn t_tail_z(q: &QueueModel, x: f64) -> Result<f64> {
    check_x(x)?;
    let sigma = finite_sigma(q)?;
    let (rho, mu) = (q.rho(), q.mu());
    let w = T_TAIL_Z_WINDOW;

    let mut cuts: Vec<f64> = (0..=T_TAIL_Z_PANELS)
        .map(|i| -w + 2.0 * w * i as f64 / T_TAIL_Z_PANELS as f64)
        .collect();
    // z_n = +-w  <=>  mu s^2 -+ w sigma s - x = 0 with s = sqrt(n)
    let disc = (w * w * sigma * sigma + 4.0 * mu * x).sqrt();
    let s_lo = ((-w * sigma + disc) / (2.0 * mu)).max(1.0);
    let s_hi = (w * sigma + disc) / (2.0 * mu);
    let n_lo = (s_lo * s_lo).floor().max(1.0) as u64;
    let n_hi = (s_hi * s_hi).ceil() as u64 + 1;
    for n in n_lo..=n_hi {
        let nf = n as f64;
        let z = (x - nf * mu) / (sigma * nf.sqrt());
        if z > -w && z < w {
            cuts.push(z);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let (nodes, weights) = normal::gauss_legendre(T_TAIL_Z_ORDER);
    let mut acc = CompensatedSum::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let step = pow_rho(rho, big_m_z(mu, sigma, x, mid) as f64 + 1.0);
        if step < NEGLIGIBLE {
            continue;
        }
        let mass: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(t, wt)| wt * normal::pdf(mid + half * t))
            .sum::<f64>()
            * half;
        acc.add(step * mass);
    }
    Ok(acc.value())
}

pub fn h_clt(q: &QueueModel, x: f64) -> Result<f64> {
    Ok(s_sum(q, x)? + t_tail(q, x)?)
}

/// `n P(X_1 > x - (n-1) mu)`, the large-deviations approximant of `P(S_n > x)`.
pub fn subexp_sum_approx(model: &IntegratedTailModel, n: u64, x: f64) -> Result<f64> {
    check_x(x)?;
    if n == 0 {
        return Err(domain("subexp_sum_approx needs n >= 1"));
    }
    let shift = (n - 1) as f64 * model.mean_integrated();
    Ok(n as f64 * model.tail_unchecked((x - shift).max(0.0)))
}

/// Every approximation evaluated at one `(rho, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationPoint {
    pub x: f64,
    pub heavy_traffic: f64,
    pub heavy_tail: f64,
    pub s_sum: f64,
    /// `rho^{x/mu}`.
    pub geometric_term: f64,
    pub h: f64,
    pub gamma: f64,
    pub j: f64,
    /// `T(rho, x)`; absent for infinite-variance models.
    pub t_tail: Option<f64>,
    pub h_clt: Option<f64>,
    pub m_of_x: u64,
}

impl ApproximationPoint {
    pub fn evaluate(q: &QueueModel, x: f64) -> Result<Self> {
        let s = s_sum(q, x)?;
        let geometric_term = geometric_term(q, x)?;
        let t = match t_tail(q, x) {
            Ok(t) => Some(t),
            Err(crate::Error::Unsupported(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            x,
            heavy_traffic: heavy_traffic(q, x)?,
            heavy_tail: heavy_tail(q, x)?,
            s_sum: s,
            geometric_term,
            h: s + geometric_term,
            gamma: gamma_factor(q, x)?,
            j: j_approx(q, x)?,
            t_tail: t,
            h_clt: t.map(|t| s + t),
            m_of_x: big_m(q, x)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto_q(alpha: f64, rho: f64) -> QueueModel {
        QueueModel::new(IntegratedTailModel::pareto(alpha).unwrap(), rho).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn heavy_traffic_examples() {
        let q = pareto_q(3.5, 0.8);
        assert!(rel(heavy_traffic(&q, 10.0).unwrap(), (-1.2f64).exp()) < 1e-15);
        assert!(rel(heavy_traffic(&q, 10.0).unwrap(), 0.3011942) < 1e-6);
        assert_eq!(heavy_traffic(&q, 0.0).unwrap(), 1.0);
        let q = pareto_q(3.1, 0.95);
        assert!(rel(heavy_traffic(&q, 125.8208).unwrap(), 0.03706) < 1e-3);
        assert!(heavy_traffic(&q, -1.0).is_err());
    }

    #[test]
    fn heavy_tail_examples() {
        let q = pareto_q(3.5, 0.8);
        assert!(rel(heavy_tail(&q, 10.0).unwrap(), 0.0126491) < 1e-5);
        assert!(rel(heavy_tail(&pareto_q(3.1, 0.5), 100.0).unwrap(), 6.3096e-5) < 1e-4);
        // below the Pareto scale the tail is 1 and the asymptotic exceeds 1
        assert!(rel(heavy_tail(&q, 0.5).unwrap(), 4.0) < 1e-15);
    }

    #[test]
    fn big_m_examples() {
        assert_eq!(big_m(&pareto_q(3.5, 0.8), 100.0).unwrap(), 54);
        assert_eq!(big_m(&pareto_q(3.5, 0.8), 1.0).unwrap(), 0);
        assert_eq!(big_m(&pareto_q(3.5, 0.8), 0.3).unwrap(), 0);
        // alpha = 2.5: mu = 3, beta = 2/3
        assert_eq!(big_m(&pareto_q(2.5, 0.8), 64.0).unwrap(), 16);
        assert_eq!(big_m(&pareto_q(3.5, 0.8), 10.0).unwrap(), 4);
    }

    #[test]
    fn empty_sum_below_one() {
        let q = pareto_q(3.5, 0.8);
        assert_eq!(s_sum(&q, 0.0).unwrap(), 0.0);
        assert_eq!(s_sum(&q, 1.0).unwrap(), 0.0);
        assert_eq!(h_approx(&q, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn gamma_examples() {
        let q = pareto_q(3.5, 0.8);
        assert_eq!(gamma_factor(&q, 0.0).unwrap(), 0.0);
        assert!((gamma_factor(&q, 10.0).unwrap() - 0.4232832).abs() < 1e-7);
        assert!((gamma_factor(&q, 1000.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn j_examples() {
        let q = pareto_q(3.5, 0.8);
        assert!((j_approx(&q, 10.0).unwrap() - 0.2674981).abs() < 1e-7);
        assert_eq!(j_approx(&q, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn clt_terms_reject_infinite_variance() {
        let q = pareto_q(2.5, 0.8);
        assert!(matches!(t_tail(&q, 10.0), Err(crate::Error::Unsupported(_))));
        assert!(matches!(t_tail_z(&q, 10.0), Err(crate::Error::Unsupported(_))));
        assert!(matches!(h_clt(&q, 10.0), Err(crate::Error::Unsupported(_))));
        let p = ApproximationPoint::evaluate(&q, 10.0).unwrap();
        assert_eq!(p.h_clt, None);
    }

    #[test]
    fn t_tail_depth_is_minimal() {
        for &rho in &[0.01, 0.5, 0.8, 0.95, 0.99] {
            let n = t_tail_depth(rho);
            assert!(rho.powf((n + 1) as f64) < T_TAIL_TRUNCATION);
            assert!(rho.powf(n as f64) >= T_TAIL_TRUNCATION);
        }
    }

    #[test]
    fn t_tail_small_rho_far_tail_vanishes() {
        let q = pareto_q(3.5, 0.01);
        let x = 50.0 * q.mu();
        assert!(t_tail(&q, x).unwrap() < 1e-10);
        assert!(t_tail_z(&q, x).unwrap() < 1e-10);
    }

    #[test]
    fn m_of_z_at_zero_is_floor_ratio() {
        assert_eq!(big_m_z(5.0 / 3.0, 1.5, 10.5, 0.0), 6);
        assert_eq!(big_m_z(5.0 / 3.0, 1.5, 9.9, 0.0), 5);
    }

    #[test]
    fn subexp_examples() {
        let m = IntegratedTailModel::pareto(3.5).unwrap();
        for &x in &[0.0, 0.5, 3.0, 40.0] {
            assert_eq!(subexp_sum_approx(&m, 1, x).unwrap(), m.tail_prob(x).unwrap());
        }
        assert!(rel(subexp_sum_approx(&m, 2, 20.0).unwrap(), 1.3897e-3) < 1e-4);
        assert!(subexp_sum_approx(&m, 0, 20.0).is_err());
    }

    #[test]
    fn point_is_consistent() {
        let q = pareto_q(3.5, 0.8);
        let p = ApproximationPoint::evaluate(&q, 10.0).unwrap();
        assert_eq!(p.h, p.s_sum + p.geometric_term);
        assert_eq!(p.h_clt, Some(p.s_sum + p.t_tail.unwrap()));
        assert_eq!(p.m_of_x, 4);
        assert!((p.geometric_term - 0.262144).abs() < 1e-12);
    }
}
