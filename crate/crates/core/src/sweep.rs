//! Tables of approximations (and optionally simulated values) over a grid of
//! `x`, with stable CSV and JSON encodings.
//!
//! CSV layout: `# key=value` metadata lines, then a header row, then one row
//! per grid point. Column order is fixed:
//! `x, heavy_traffic, heavy_tail, h, j, [h_clt], [mc_estimate, mc_rel_err], [regime]`;
//! bracketed columns appear only when enabled for the table. Floats are
//! written with 17 significant digits so a parse reproduces them exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::approximations::{h_approx, heavy_tail, heavy_traffic, j_approx, t_tail};
use crate::approximations::s_sum;
use crate::distributions::QueueModel;
use crate::error::{domain, Error, Result};
use crate::mc_oracle::{ak_estimate, AkOptions};
use crate::transition::{crossing_point, regime_classify, threshold_x, Regime};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub heavy_traffic: f64,
    pub heavy_tail: f64,
    pub h: f64,
    pub j: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h_clt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mc_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mc_rel_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regime: Option<Regime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    /// The model literal exactly as given.
    pub model: String,
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub crossing_point: Option<f64>,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Columns {
    pub h_clt: bool,
    pub mc: bool,
    pub regime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

/// Inputs of [`SweepTable::build`].
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub model_literal: String,
    pub queue: QueueModel,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub log_grid: bool,
    /// Run the conditional Monte Carlo estimator at every point.
    pub simulate: Option<AkOptions>,
    pub seed: u64,
}

/// `points` values from `lo` to `hi`, geometric when `log` is set.
pub fn grid(lo: f64, hi: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(domain("a grid needs at least one point"));
    }
    if !(lo >= 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(domain(format!("grid bounds must be finite and >= 0, got [{lo}, {hi}]")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    if hi <= lo {
        return Err(domain(format!("grid needs x_max > x_min, got [{lo}, {hi}]")));
    }
    if log && lo <= 0.0 {
        return Err(domain("a log grid needs x_min > 0"));
    }
    let last = (points - 1) as f64;
    let mut xs: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 / last;
            if log {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect();
    xs[points - 1] = hi;
    Ok(xs)
}

/// Per-row seed derived from the run seed (splitmix64 finalizer).
pub fn row_seed(seed: u64, row: usize) -> u64 {
    let mut z = seed ^ (row as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SweepTable {
    pub fn build(spec: &SweepSpec) -> Result<Self> {
        let q = &spec.queue;
        let xs = grid(spec.x_min, spec.x_max, spec.points, spec.log_grid)?;
        let pareto = q.model().tail_index().is_some();
        let finite_var = q.model().variance_integrated().finite().is_some();
        let mut rows = Vec::with_capacity(xs.len());
        for (i, &x) in xs.iter().enumerate() {
            let s = s_sum(q, x)?;
            let mc = match &spec.simulate {
                Some(opts) => Some(ak_estimate(q, x, opts, row_seed(spec.seed, i))?),
                None => None,
            };
            rows.push(SweepRow {
                x,
                heavy_traffic: heavy_traffic(q, x)?,
                heavy_tail: heavy_tail(q, x)?,
                h: h_approx(q, x)?,
                j: j_approx(q, x)?,
                h_clt: if finite_var { Some(s + t_tail(q, x)?) } else { None },
                mc_estimate: mc.map(|e| e.estimate),
                mc_rel_err: mc.map(|e| e.rel_err),
                regime: if pareto { Some(regime_classify(q, x)?.regime) } else { None },
            });
        }
        Ok(Self {
            metadata: SweepMetadata {
                model: spec.model_literal.clone(),
                rho: q.rho(),
                seed: spec.simulate.map(|_| spec.seed),
                threshold_x: if pareto { Some(threshold_x(q, 1.0)?) } else { None },
                crossing_point: if pareto { crossing_point(q).ok() } else { None },
                version: TOOL_VERSION.to_string(),
            },
            rows,
        })
    }

    /// Columns present in this table, taken from the first row.
    pub fn columns(&self) -> Columns {
        self.rows
            .first()
            .map(|r| Columns {
                h_clt: r.h_clt.is_some(),
                mc: r.mc_estimate.is_some(),
                regime: r.regime.is_some(),
            })
            .unwrap_or_default()
    }

    /// Checks that `x` is strictly increasing and every row carries the same columns.
    pub fn validate(&self) -> Result<()> {
        let cols = self.columns();
        for w in self.rows.windows(2) {
            if !(w[1].x > w[0].x) {
                return Err(domain("sweep rows must have strictly increasing x"));
            }
        }
        for r in &self.rows {
            let c = Columns {
                h_clt: r.h_clt.is_some(),
                mc: r.mc_estimate.is_some() && r.mc_rel_err.is_some(),
                regime: r.regime.is_some(),
            };
            if c != cols {
                return Err(domain(format!("row at x = {} has a different column set", r.x)));
            }
        }
        Ok(())
    }

    fn header(cols: Columns) -> Vec<&'static str> {
        let mut h = vec!["x", "heavy_traffic", "heavy_tail", "h", "j"];
        if cols.h_clt {
            h.push("h_clt");
        }
        if cols.mc {
            h.extend(["mc_estimate", "mc_rel_err"]);
        }
        if cols.regime {
            h.push("regime");
        }
        h
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        self.validate()?;
        let io = |source| Error::Io {
            path: "<csv output>".into(),
            source,
        };
        let m = &self.metadata;
        let mut meta = vec![
            format!("model={}", m.model),
            format!("rho={}", fmt_f64(m.rho)),
        ];
        if let Some(s) = m.seed {
            meta.push(format!("seed={s}"));
        }
        if let Some(t) = m.threshold_x {
            meta.push(format!("threshold_x={}", fmt_f64(t)));
        }
        if let Some(c) = m.crossing_point {
            meta.push(format!("crossing_point={}", fmt_f64(c)));
        }
        meta.push(format!("version={}", m.version));
        for line in meta {
            writeln!(out, "# {line}").map_err(io)?;
        }

        let cols = self.columns();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header(cols))?;
        for r in &self.rows {
            let mut rec = vec![
                fmt_f64(r.x),
                fmt_f64(r.heavy_traffic),
                fmt_f64(r.heavy_tail),
                fmt_f64(r.h),
                fmt_f64(r.j),
            ];
            if let Some(v) = r.h_clt {
                rec.push(fmt_f64(v));
            }
            if let (Some(e), Some(re)) = (r.mc_estimate, r.mc_rel_err) {
                rec.push(fmt_f64(e));
                rec.push(fmt_f64(re));
            }
            if let Some(g) = r.regime {
                rec.push(g.to_string());
            }
            w.write_record(rec)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        let mut input = input;
        input.read_to_string(&mut text).map_err(|source| Error::Io {
            path: "<csv input>".into(),
            source,
        })?;
        let mut meta = std::collections::BTreeMap::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
        }
        let get = |k: &str| meta.get(k).cloned();
        let num = |k: &str| -> Result<Option<f64>> {
            get(k).map(|v| parse_f64(&v)).transpose()
        };
        let metadata = SweepMetadata {
            model: get("model").ok_or_else(|| Error::Parse("csv lacks model metadata".into()))?,
            rho: num("rho")?.ok_or_else(|| Error::Parse("csv lacks rho metadata".into()))?,
            seed: get("seed")
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad seed {s:?}"))))
                .transpose()?,
            threshold_x: num("threshold_x")?,
            crossing_point: num("crossing_point")?,
            version: get("version").unwrap_or_default(),
        };

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let need = |name: &str| {
            col(name).ok_or_else(|| Error::Parse(format!("csv lacks column {name:?}")))
        };
        let (ix, iht, itl, ih, ij) = (need("x")?, need("heavy_traffic")?, need("heavy_tail")?, need("h")?, need("j")?);
        let (iclt, imc, ire, ireg) = (col("h_clt"), col("mc_estimate"), col("mc_rel_err"), col("regime"));

        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let f = |i: usize| parse_f64(rec.get(i).unwrap_or(""));
            let opt = |i: Option<usize>| i.map(f).transpose();
            rows.push(SweepRow {
                x: f(ix)?,
                heavy_traffic: f(iht)?,
                heavy_tail: f(itl)?,
                h: f(ih)?,
                j: f(ij)?,
                h_clt: opt(iclt)?,
                mc_estimate: opt(imc)?,
                mc_rel_err: opt(ire)?,
                regime: ireg
                    .map(|i| rec.get(i).unwrap_or("").parse::<Regime>())
                    .transpose()?,
            });
        }
        let table = Self { metadata, rows };
        table.validate()?;
        Ok(table)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        self.validate()?;
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let table: Self = serde_json::from_reader(input)?;
        table.validate()?;
        Ok(table)
    }
}

/// 17 significant digits: enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad number {s:?} in csv")))
}
