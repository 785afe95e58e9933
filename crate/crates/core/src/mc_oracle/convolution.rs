//! Exact tail probabilities of lattice sums and the truncated
//! Pollaczek-Khintchine series `P(W > x) = sum_{n>=1} (1-rho) rho^n P(S_n > x)`.

use serde::{Deserialize, Serialize};

use crate::distributions::{Bracket, IntegratedTailModel, Lattice, QueueModel};
use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;

/// Upper bound on `terms * lattice points` for a single computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvolutionBudget {
    pub max_cells: u64,
}

impl Default for ConvolutionBudget {
    fn default() -> Self {
        Self { max_cells: 100_000_000 }
    }
}

impl ConvolutionBudget {
    fn check(&self, terms: u64, points: usize) -> Result<()> {
        let required = terms.saturating_mul(points as u64);
        if required > self.max_cells {
            return Err(Error::Resource {
                required,
                budget: self.max_cells,
            });
        }
        Ok(())
    }
}

/// Running n-fold convolution restricted to the points `0..len`.
///
/// Restricting is exact for `P(S_n <= k h)` because all summands are
/// nonnegative: mass beyond the window never comes back into it.
struct RunningConvolution<'a> {
    pmf: &'a [f64],
    current: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> RunningConvolution<'a> {
    fn new(pmf: &'a [f64], len: usize) -> Self {
        let mut current = vec![0.0; len];
        current[0] = 1.0;
        Self {
            pmf: &pmf[..pmf.len().min(len)],
            current,
            scratch: vec![0.0; len],
        }
    }

    fn step(&mut self) {
        let len = self.current.len();
        self.scratch.iter_mut().for_each(|v| *v = 0.0);
        for (i, &a) in self.current.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let reach = (len - i).min(self.pmf.len());
            let out = &mut self.scratch[i..i + reach];
            for (o, &b) in out.iter_mut().zip(&self.pmf[..reach]) {
                *o += a * b;
            }
        }
        std::mem::swap(&mut self.current, &mut self.scratch);
    }

    /// `P(S_n > k h)` for every `k` in the window.
    fn tails(&self) -> Vec<f64> {
        let mut below = CompensatedSum::new();
        self.current
            .iter()
            .map(|&m| {
                below.add(m);
                (1.0 - below.value()).max(0.0)
            })
            .collect()
    }

    fn tail_at_end(&self) -> f64 {
        let below: CompensatedSum = self.current.iter().copied().collect();
        (1.0 - below.value()).max(0.0)
    }

    fn mass(&self) -> f64 {
        self.current.iter().sum()
    }
}

fn window(dist: &Lattice, x: f64) -> Result<usize> {
    dist.floor_index(x)
        .map(|k| k + 1)
        .ok_or_else(|| domain(format!("x must be >= 0, got {x}")))
}

/// Exact `P(S_n > x)` for i.i.d. summands with lattice law `dist`.
pub fn convolve_tail(dist: &Lattice, n: u64, x: f64, budget: ConvolutionBudget) -> Result<f64> {
    if n == 0 {
        return Err(domain("convolve_tail needs n >= 1"));
    }
    let len = window(dist, x)?;
    budget.check(n, len)?;
    let mut conv = RunningConvolution::new(dist.mass(), len);
    for _ in 0..n {
        conv.step();
    }
    Ok(conv.tail_at_end())
}

/// `P(S_n > k h)` for all lattice points `k h <= x_max`.
pub fn convolve_tail_curve(
    dist: &Lattice,
    n: u64,
    x_max: f64,
    budget: ConvolutionBudget,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(domain("convolve_tail needs n >= 1"));
    }
    let len = window(dist, x_max)?;
    budget.check(n, len)?;
    let mut conv = RunningConvolution::new(dist.mass(), len);
    for _ in 0..n {
        conv.step();
    }
    Ok(conv.tails())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PkOptions {
    /// Neglected series tail: terms stop at `N` with `rho^{N+1} <= tol`.
    pub tol: f64,
    /// Lattice spacing used to discretize continuous models.
    pub spacing: f64,
    pub budget: ConvolutionBudget,
}

impl Default for PkOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            spacing: 0.05,
            budget: ConvolutionBudget::default(),
        }
    }
}

/// Truncated Pollaczek-Khintchine value with a rigorous enclosure.
///
/// Continuous models are discretized twice: `lower` uses a stochastically
/// smaller lattice, `upper` a larger one, so
/// `lower <= P(W > x) <= upper + truncation_bound`. For lattice models both
/// coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PkExact {
    /// Midpoint of the two brackets.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub truncation_n: u64,
    /// `rho^{truncation_n + 1}`, which bounds the neglected terms.
    pub truncation_bound: f64,
    pub lattice_spacing: f64,
}

impl PkExact {
    pub fn bracket_width(&self) -> f64 {
        self.upper - self.lower
    }

    /// `[lower, upper + truncation_bound]`, which contains `P(W > x)`.
    pub fn enclosure(&self) -> (f64, f64) {
        (self.lower, self.upper + self.truncation_bound)
    }
}

/// Series depth: smallest `N` with `rho^N <= tol`, so that `rho^{N+1} <= tol` too.
pub fn pk_depth(rho: f64, tol: f64) -> u64 {
    let mut n = (tol.ln() / rho.ln()).ceil().max(1.0) as u64;
    while n > 1 && rho.powf((n - 1) as f64) <= tol {
        n -= 1;
    }
    while rho.powf(n as f64) > tol {
        n += 1;
    }
    n
}

/// Series values `P(W > k h)` for every lattice point of `dist` up to `x_max`.
fn pk_series(dist: &Lattice, rho: f64, depth: u64, x_max: f64, budget: ConvolutionBudget) -> Result<Vec<f64>> {
    let len = window(dist, x_max)?;
    budget.check(depth, len)?;
    let mut conv = RunningConvolution::new(dist.mass(), len);
    let mut acc = vec![CompensatedSum::new(); len];
    let log_rho = rho.ln();
    for n in 1..=depth {
        conv.step();
        let weight = (1.0 - rho) * (n as f64 * log_rho).exp();
        if conv.mass() < 1e-300 {
            // every later S_m exceeds the whole window
            let rest = (n as f64 * log_rho).exp() - ((depth + 1) as f64 * log_rho).exp();
            acc.iter_mut().for_each(|a| a.add(rest));
            break;
        }
        for (a, t) in acc.iter_mut().zip(conv.tails()) {
            a.add(weight * t);
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

/// The truncated series on a grid, with lower and upper lattice brackets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PkCurve {
    pub spacing: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub truncation_n: u64,
    pub truncation_bound: f64,
}

impl PkCurve {
    /// Bracketed value at `x` (which must lie in the computed range).
    pub fn at(&self, x: f64) -> Option<PkExact> {
        if x < 0.0 {
            return None;
        }
        let k = (x / self.spacing + 1e-9).floor() as usize;
        let (lower, upper) = (*self.lower.get(k)?, *self.upper.get(k)?);
        Some(PkExact {
            value: 0.5 * (lower + upper),
            lower,
            upper,
            truncation_n: self.truncation_n,
            truncation_bound: self.truncation_bound,
            lattice_spacing: self.spacing,
        })
    }
}

pub fn pk_truncated_curve(q: &QueueModel, x_max: f64, opts: &PkOptions) -> Result<PkCurve> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(domain(format!("tol must lie in (0,1), got {}", opts.tol)));
    }
    if !(x_max >= 0.0 && x_max.is_finite()) {
        return Err(domain(format!("x must be finite and >= 0, got {x_max}")));
    }
    let rho = q.rho();
    let depth = pk_depth(rho, opts.tol);
    let truncation_bound = rho.powf((depth + 1) as f64);
    match q.model() {
        IntegratedTailModel::Lattice(l) => {
            let values = pk_series(l, rho, depth, x_max, opts.budget)?;
            Ok(PkCurve {
                spacing: l.spacing(),
                lower: values.clone(),
                upper: values,
                truncation_n: depth,
                truncation_bound,
            })
        }
        model => {
            let h = opts.spacing;
            // the cap only has to exceed every queried point
            let cap = x_max + 2.0 * h;
            let lo = Lattice::discretize(model, h, cap, Bracket::Lower)?;
            let up = Lattice::discretize(model, h, cap, Bracket::Upper)?;
            Ok(PkCurve {
                spacing: h,
                lower: pk_series(&lo, rho, depth, x_max, opts.budget)?,
                upper: pk_series(&up, rho, depth, x_max, opts.budget)?,
                truncation_n: depth,
                truncation_bound,
            })
        }
    }
}

pub fn pk_truncated(q: &QueueModel, x: f64, opts: &PkOptions) -> Result<PkExact> {
    let curve = pk_truncated_curve(q, x, opts)?;
    curve
        .at(x)
        .ok_or_else(|| domain(format!("x = {x} fell outside the computed lattice window")))
}
