use std::io::Write;
use std::path::PathBuf;

use mg1_core::approximations::{h_approx, h_clt, heavy_tail, heavy_traffic, j_approx};
use mg1_core::geom_sums::{geom_gamma, geom_tail_approx, geom_threshold};
use mg1_core::light_tails::{adjustment_coefficient, corrected_heavy_traffic, cramer_lundberg_tail};
use mg1_core::mc_oracle::{ak_estimate, crude_geom_mc, crude_mc};
use mg1_core::sweep::{fmt_f64, grid, row_seed, SweepSpec};
use mg1_core::transition::{
    crossing_point, kappa, regime_classify_with_band, threshold_rho, threshold_x, DEFAULT_BAND,
};
use mg1_core::{
    parse_model, AkOptions, Error, GeomModel, QueueModel, Regime, SimulationEstimate, SweepTable,
};
use serde::Serialize;

use crate::{
    ApproxArgs, ApproxMethod, CompareArgs, CompareFormat, GeomArgs, ModelArgs, SimArgs, SimMethod,
    SimulateArgs, SweepArgs, TableFormat, ThresholdArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Io { .. } => 4,
            Self::Core(e) => match e {
                Error::Domain(_) | Error::Parse(_) => 2,
                Error::Unsupported(_) | Error::NoCrossing { .. } | Error::Resource { .. } => 3,
                Error::Io { .. } | Error::Json(_) => 4,
                Error::Csv(c) if c.is_io_error() => 4,
                Error::Csv(_) => 2,
            },
        }
    }
}

type Result<T = ()> = std::result::Result<T, CliError>;

fn stdout_err(source: std::io::Error) -> CliError {
    CliError::Io {
        path: "<stdout>".into(),
        source,
    }
}

fn queue(m: &ModelArgs) -> Result<QueueModel> {
    Ok(QueueModel::new(parse_model(&m.dist)?, m.rho)?)
}

fn ak_options(s: &SimArgs) -> Result<AkOptions> {
    if !(s.rel_err > 0.0 && s.rel_err < 1.0) {
        return Err(CliError::Usage(format!("--rel-err must lie in (0, 1), got {}", s.rel_err)));
    }
    Ok(AkOptions {
        target_rel_err: s.rel_err,
        max_samples: s.max_samples,
        ..AkOptions::default()
    })
}

/// Prints `key: value` lines with the keys aligned.
fn record(out: &mut impl Write, rows: &[(&str, String)]) -> Result {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        writeln!(out, "{k:<width$}  {v}").map_err(stdout_err)?;
    }
    Ok(())
}

fn estimate_rows(e: &SimulationEstimate) -> Vec<(&'static str, String)> {
    vec![
        ("estimate", e.estimate.to_string()),
        ("half_width", e.half_width.to_string()),
        ("rel_err", e.rel_err.to_string()),
        ("confidence", e.confidence.to_string()),
        ("n_samples", e.n_samples.to_string()),
        ("seed", e.seed.to_string()),
        ("method", e.method.to_string()),
        ("converged", e.converged.to_string()),
    ]
}

pub fn approx(a: ApproxArgs, out: &mut impl Write) -> Result {
    let q = queue(&a.model)?;
    let x = a.x;
    let mut rows = vec![("method", format!("{:?}", a.method).to_lowercase())];
    let value = match a.method {
        ApproxMethod::Ht => heavy_traffic(&q, x)?,
        ApproxMethod::Tail => heavy_tail(&q, x)?,
        ApproxMethod::H => h_approx(&q, x)?,
        ApproxMethod::J => j_approx(&q, x)?,
        ApproxMethod::HClt => h_clt(&q, x)?,
        ApproxMethod::Cl => {
            rows.push(("theta_star", adjustment_coefficient(&q)?.theta_star.to_string()));
            cramer_lundberg_tail(&q, x)?
        }
        ApproxMethod::CorrectedHt => {
            let scaled = x * (1.0 - q.rho()).powi(2);
            rows.push(("x_scaled", scaled.to_string()));
            corrected_heavy_traffic(&q, scaled)?
        }
        ApproxMethod::Geom => {
            let p = a.p.unwrap_or(1.0 - q.rho());
            rows.push(("p", p.to_string()));
            geom_tail_approx(&GeomModel::new(q.model().clone(), p)?, x)?
        }
    };
    rows[0].1 = match a.method {
        ApproxMethod::HClt => "h-clt".into(),
        ApproxMethod::CorrectedHt => "corrected-ht".into(),
        _ => rows[0].1.clone(),
    };
    rows.insert(1, ("x", x.to_string()));
    rows.push(("value", value.to_string()));
    if value > 1.0 {
        rows.push(("flag", "value exceeds 1 (asymptotic used outside its range)".into()));
    }
    if q.model().tail_index().is_some() {
        let r = regime_classify_with_band(&q, x, a.band)?;
        rows.push(("regime", r.regime.to_string()));
        rows.push(("c_value", r.c_value.to_string()));
        rows.push(("threshold_x", r.threshold_x.to_string()));
    } else {
        rows.push(("regime", "n/a".into()));
    }
    record(out, &rows)
}

pub fn sweep(a: SweepArgs, out: &mut impl Write) -> Result {
    let spec = SweepSpec {
        model_literal: a.model.dist.clone(),
        queue: queue(&a.model)?,
        x_min: a.grid.x_min,
        x_max: a.grid.x_max,
        points: a.grid.points,
        log_grid: a.grid.log_grid,
        simulate: if a.simulate { Some(ak_options(&a.sim)?) } else { None },
        seed: a.sim.seed,
    };
    let table = SweepTable::build(&spec)?;
    let mut buf = Vec::new();
    match a.format {
        TableFormat::Csv => table.write_csv(&mut buf)?,
        TableFormat::Json => {
            table.write_json(&mut buf)?;
            buf.push(b'\n');
        }
    }
    emit(a.out, &buf, out)
}

fn emit(path: Option<PathBuf>, bytes: &[u8], out: &mut impl Write) -> Result {
    match path {
        Some(p) => std::fs::write(&p, bytes).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => out.write_all(bytes).map_err(stdout_err),
    }
}

pub fn threshold(a: ThresholdArgs, out: &mut impl Write) -> Result {
    let q = queue(&a.model)?;
    let mut rows = vec![
        ("threshold_x", threshold_x(&q, a.c)?.to_string()),
        ("kappa", kappa(q.model())?.to_string()),
        ("c", a.c.to_string()),
    ];
    match crossing_point(&q) {
        Ok(x) => rows.push(("crossing_point", x.to_string())),
        Err(Error::NoCrossing { .. }) => rows.push(("crossing_point", "none".into())),
        Err(e) => return Err(e.into()),
    }
    if let Some(x) = a.x {
        let r = threshold_rho(q.model(), x, a.c)?;
        rows.push(("threshold_rho", r.rho.to_string()));
        rows.push(("threshold_rho_in_range", r.in_range.to_string()));
    }
    record(out, &rows)
}

pub fn simulate(a: SimulateArgs, out: &mut impl Write) -> Result {
    let q = queue(&a.model)?;
    let est = match a.method {
        SimMethod::Ak => ak_estimate(&q, a.x, &ak_options(&a.sim)?, a.sim.seed)?,
        SimMethod::Crude => crude_mc(&q, a.x, a.samples, a.sim.seed)?,
    };
    let mut rows = vec![("x", a.x.to_string())];
    rows.extend(estimate_rows(&est));
    record(out, &rows)
}

#[derive(Serialize)]
struct CompareRow {
    x: f64,
    mc_estimate: f64,
    mc_rel_err: f64,
    heavy_traffic: f64,
    heavy_traffic_ratio: f64,
    heavy_tail: f64,
    heavy_tail_ratio: f64,
    h: f64,
    h_ratio: f64,
    j: f64,
    j_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_clt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_clt_ratio: Option<f64>,
}

#[derive(Serialize)]
struct CompareMeta<'a> {
    model: &'a str,
    rho: f64,
    seed: u64,
    version: &'a str,
}

#[derive(Serialize)]
struct CompareTable<'a> {
    metadata: CompareMeta<'a>,
    rows: Vec<CompareRow>,
}

pub fn compare(a: CompareArgs, out: &mut impl Write) -> Result {
    let q = queue(&a.model)?;
    let opts = ak_options(&a.sim)?;
    let xs = grid(a.grid.x_min, a.grid.x_max, a.grid.points, a.grid.log_grid)?;
    let finite_var = q.model().variance_integrated().finite().is_some();
    let mut rows = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let mc = ak_estimate(&q, x, &opts, row_seed(a.sim.seed, i))?;
        let m = mc.estimate;
        let (ht, tail, h, j) = (
            heavy_traffic(&q, x)?,
            heavy_tail(&q, x)?,
            h_approx(&q, x)?,
            j_approx(&q, x)?,
        );
        let clt = if finite_var { Some(h_clt(&q, x)?) } else { None };
        rows.push(CompareRow {
            x,
            mc_estimate: m,
            mc_rel_err: mc.rel_err,
            heavy_traffic: ht,
            heavy_traffic_ratio: ht / m,
            heavy_tail: tail,
            heavy_tail_ratio: tail / m,
            h,
            h_ratio: h / m,
            j,
            j_ratio: j / m,
            h_clt: clt,
            h_clt_ratio: clt.map(|v| v / m),
        });
    }
    let mut header = vec![
        "x", "mc_estimate", "mc_rel_err", "heavy_traffic", "heavy_traffic_ratio", "heavy_tail",
        "heavy_tail_ratio", "h", "h_ratio", "j", "j_ratio",
    ];
    if finite_var {
        header.extend(["h_clt", "h_clt_ratio"]);
    }
    let cells = |r: &CompareRow| {
        let mut v = vec![
            r.x, r.mc_estimate, r.mc_rel_err, r.heavy_traffic, r.heavy_traffic_ratio, r.heavy_tail,
            r.heavy_tail_ratio, r.h, r.h_ratio, r.j, r.j_ratio,
        ];
        v.extend(r.h_clt.iter().chain(r.h_clt_ratio.iter()));
        v
    };
    match a.format {
        CompareFormat::Table => {
            let short = |s: &str| s.replace("heavy_traffic", "ht").replace("heavy_tail", "tail");
            let line: Vec<String> = header.iter().map(|h| format!("{:>12}", short(h))).collect();
            writeln!(out, "{}", line.join(" ")).map_err(stdout_err)?;
            for r in &rows {
                let line: Vec<String> = cells(r).iter().map(|v| format!("{v:>12.5e}")).collect();
                writeln!(out, "{}", line.join(" ")).map_err(stdout_err)?;
            }
        }
        CompareFormat::Csv => {
            writeln!(out, "# model={}", a.model.dist).map_err(stdout_err)?;
            writeln!(out, "# rho={}", fmt_f64(q.rho())).map_err(stdout_err)?;
            writeln!(out, "# seed={}", a.sim.seed).map_err(stdout_err)?;
            writeln!(out, "# version={}", mg1_core::sweep::TOOL_VERSION).map_err(stdout_err)?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(&header).map_err(Error::from)?;
            for r in &rows {
                w.write_record(cells(r).iter().map(|&v| fmt_f64(v))).map_err(Error::from)?;
            }
            w.flush().map_err(stdout_err)?;
        }
        CompareFormat::Json => {
            let table = CompareTable {
                metadata: CompareMeta {
                    model: &a.model.dist,
                    rho: q.rho(),
                    seed: a.sim.seed,
                    version: mg1_core::sweep::TOOL_VERSION,
                },
                rows,
            };
            serde_json::to_writer_pretty(&mut *out, &table).map_err(Error::from)?;
            writeln!(out).map_err(stdout_err)?;
        }
    }
    Ok(())
}

pub fn geom(a: GeomArgs, out: &mut impl Write) -> Result {
    let g = GeomModel::pareto(a.beta_y, a.p)?;
    let y = geom_threshold(&g, a.c)?;
    let mut rows = vec![
        ("beta_y", a.beta_y.to_string()),
        ("p", a.p.to_string()),
        ("mu_y", g.mu_y().to_string()),
        ("tau", g.tau().to_string()),
        ("c", a.c.to_string()),
        ("threshold_y", y.to_string()),
    ];
    if let Some(x) = a.x {
        // same banding as the queue regimes, with c = x / y(p)
        let c_value = x / geom_threshold(&g, 1.0)?;
        let regime = if c_value < 1.0 - DEFAULT_BAND {
            Regime::HeavyTraffic
        } else if c_value > 1.0 + DEFAULT_BAND {
            Regime::HeavyTail
        } else {
            Regime::Transition
        };
        rows.push(("x", x.to_string()));
        rows.push(("c_value", c_value.to_string()));
        rows.push(("regime", regime.to_string()));
        rows.push(("gamma", geom_gamma(&g, x)?.to_string()));
        rows.push(("approx", geom_tail_approx(&g, x)?.to_string()));
        if a.samples > 0 {
            let mc = crude_geom_mc(&g, x, a.samples, a.seed)?;
            rows.push(("mc_estimate", mc.estimate.to_string()));
            rows.push(("mc_half_width", mc.half_width.to_string()));
            rows.push(("mc_n_samples", mc.n_samples.to_string()));
            rows.push(("seed", mc.seed.to_string()));
        }
    }
    record(out, &rows)
}
