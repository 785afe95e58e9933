use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

use super::IntegratedTailModel;

/// Relative slack used when deciding whether a query point coincides with
/// a lattice point.
const SNAP: f64 = 1e-9;

/// A distribution on the points `k * spacing`, `k = 0, 1, ...`.
///
/// `mass[k]` is the probability of the point `k * spacing`. Tail sums are
/// precomputed from the right so that small tails keep full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct Lattice {
    spacing: f64,
    mass: Vec<f64>,
    /// `upper[k] = sum_{j >= k} mass[j]`, with a trailing zero.
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    spacing: f64,
    mass: Vec<f64>,
}

impl TryFrom<LatticeRepr> for Lattice {
    type Error = Error;
    fn try_from(r: LatticeRepr) -> Result<Self> {
        Lattice::new(r.spacing, r.mass)
    }
}

impl From<Lattice> for LatticeRepr {
    fn from(l: Lattice) -> Self {
        LatticeRepr {
            spacing: l.spacing,
            mass: l.mass,
        }
    }
}

/// Which side of a continuous law a discretization should sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bracket {
    /// Mass of `((k-1)h, kh]` moved down to `(k-1)h`: stochastically smaller.
    Lower,
    /// Mass of `((k-1)h, kh]` moved up to `kh`: stochastically larger.
    Upper,
}

impl Lattice {
    pub fn new(spacing: f64, mass: Vec<f64>) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(domain(format!("lattice spacing must be positive, got {spacing}")));
        }
        if mass.is_empty() {
            return Err(domain("lattice needs at least one support point"));
        }
        if let Some(m) = mass.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(domain(format!("lattice mass must be finite and nonnegative, got {m}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("lattice mass sums to {total}, expected 1")));
        }
        let mut upper = vec![0.0; mass.len() + 1];
        for k in (0..mass.len()).rev() {
            upper[k] = upper[k + 1] + mass[k];
        }
        Ok(Self {
            spacing,
            mass,
            upper,
        })
    }

    /// Builds a lattice from `(point, mass)` pairs. Points must be
    /// nonnegative multiples of a common spacing; when `spacing` is `None`
    /// the largest spacing consistent with the points is inferred.
    pub fn from_points(points: &[(f64, f64)], spacing: Option<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(domain("lattice needs at least one support point"));
        }
        if let Some(&(p, _)) = points.iter().find(|(p, _)| !(p.is_finite() && *p >= 0.0)) {
            return Err(domain(format!("lattice support points must be >= 0, got {p}")));
        }
        let h = match spacing {
            Some(h) => h,
            None => infer_spacing(points)?,
        };
        if !(h.is_finite() && h > 0.0) {
            return Err(domain(format!("lattice spacing must be positive, got {h}")));
        }
        let mut mass = Vec::new();
        for &(p, m) in points {
            let k = (p / h).round();
            if (k * h - p).abs() > SNAP * p.max(h) {
                return Err(domain(format!("support point {p} is not a multiple of spacing {h}")));
            }
            let k = k as usize;
            if mass.len() <= k {
                mass.resize(k + 1, 0.0);
            }
            mass[k] += m;
        }
        Self::new(h, mass)
    }

    /// Reads a two-column text file of `point mass` rows (whitespace or
    /// comma separated, `#` starts a comment).
    pub fn load(path: &Path, spacing: Option<f64>) -> Result<Self> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::open(path).map_err(io)?;
        let mut points = Vec::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("{}:{}: bad number {s:?}", path.display(), lineno + 1))
                })
            };
            match fields.as_slice() {
                [p, m] => points.push((parse(p)?, parse(m)?)),
                _ => {
                    return Err(Error::Parse(format!(
                        "{}:{}: expected two columns (point, mass)",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_points(&points, spacing)
    }

    /// Discretizes a continuous model onto spacing `h`, exact for tail
    /// queries below `cap`. Mass beyond the last regular point is lumped
    /// into one atom at or beyond `cap`.
    pub fn discretize(
        model: &IntegratedTailModel,
        spacing: f64,
        cap: f64,
        bracket: Bracket,
    ) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(domain(format!("spacing must be positive, got {spacing}")));
        }
        if !(cap.is_finite() && cap > 0.0) {
            return Err(domain(format!("cap must be positive, got {cap}")));
        }
        let cells = (cap / spacing).ceil() as usize + 1;
        let mut mass = vec![0.0; cells + 1];
        let mut prev_tail = 1.0 - model.atom_prob(0.0);
        // an atom at zero stays at zero under either bracket
        mass[0] = 1.0 - prev_tail;
        for k in 1..=cells {
            let tail = model.tail_unchecked(k as f64 * spacing);
            let cell = (prev_tail - tail).max(0.0);
            match bracket {
                Bracket::Upper => mass[k] += cell,
                Bracket::Lower => mass[k - 1] += cell,
            }
            prev_tail = tail;
        }
        // overflow: X > cells*h
        mass[cells] += prev_tail;
        let total: f64 = mass.iter().sum();
        for m in &mut mass {
            *m /= total;
        }
        Self::new(spacing, mass)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 * self.spacing
    }

    /// Index of the largest lattice point `<= x` (points within a relative
    /// 1e-9 of `x` count as equal to it). `None` if `x` is below 0.
    pub fn floor_index(&self, x: f64) -> Option<usize> {
        if x < 0.0 {
            return None;
        }
        Some((x / self.spacing + SNAP).floor() as usize)
    }

    pub fn tail_prob(&self, x: f64) -> f64 {
        match self.floor_index(x) {
            None => 1.0,
            Some(k) => self.upper[(k + 1).min(self.mass.len())],
        }
    }

    pub fn atom_prob(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let k = (x / self.spacing).round();
        if (k * self.spacing - x).abs() > SNAP * x.max(self.spacing) {
            return 0.0;
        }
        self.mass.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| self.point(k) * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| (self.point(k) - mean).powi(2) * m)
            .sum()
    }

    /// Smallest support point whose distribution function reaches `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        // P(X <= point k) = 1 - upper[k+1]; find the first k with 1 - upper[k+1] >= u.
        let target = 1.0 - u;
        let k = self.upper[1..].partition_point(|&t| t > target);
        self.point(k.min(self.mass.len() - 1))
    }
}

fn infer_spacing(points: &[(f64, f64)]) -> Result<f64> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut h = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        if x > 0.0 {
            h = h.min(x);
        }
        if i > 0 {
            let d = x - xs[i - 1];
            if d > SNAP * x {
                h = h.min(d);
            }
        }
    }
    if !h.is_finite() {
        // a single atom at zero
        return Ok(1.0);
    }
    for &x in &xs {
        let k = (x / h).round();
        if (k * h - x).abs() > SNAP * x.max(h) {
            return Err(domain(format!(
                "cannot infer a common spacing for the support points; pass spacing=H explicitly"
            )));
        }
    }
    Ok(h)
}
