//! Acceptance criteria. Each test prints its checks and one summary line
//! `criterion N: PASS|FAIL ...`, then asserts the summary.

use std::time::Instant;

use mg1_core::approximations::{
    gamma_factor, h_approx, heavy_tail, heavy_traffic, j_approx, subexp_sum_approx, t_tail,
    t_tail_z,
};
use mg1_core::geom_sums::{geom_tail_approx, geom_threshold};
use mg1_core::light_tails::cramer_lundberg_tail;
use mg1_core::mc_oracle::{ak_estimate, convolve_tail, crude_geom_mc, crude_mc, pk_truncated, ConvolutionBudget};
use mg1_core::sweep::{grid, row_seed, SweepSpec};
use mg1_core::transition::threshold_x;
use mg1_core::{
    AkOptions, Bracket, GeomModel, IntegratedTailModel, Lattice, PkOptions, QueueModel,
    SimulationEstimate, SweepTable,
};
use rand::{Rng, SeedableRng};

fn pareto(alpha: f64, rho: f64) -> QueueModel {
    QueueModel::new(IntegratedTailModel::pareto(alpha).unwrap(), rho).unwrap()
}

fn mm1(rho: f64) -> QueueModel {
    QueueModel::new(IntegratedTailModel::exponential(1.0).unwrap(), rho).unwrap()
}

fn summary(n: u32, pass: bool, started: Instant, detail: &str) {
    println!(
        "criterion {n}: {} {detail} ({:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
}

fn check(ok: bool, line: String) -> bool {
    println!("  [{}] {line}", if ok { "ok" } else { "FAIL" });
    ok
}

#[test]
fn criterion_1_probability_of_waiting() {
    let t0 = Instant::now();
    let mut pass = true;
    let opts = PkOptions::default();
    for rho in [0.3, 0.8, 0.95] {
        let q = pareto(3.5, rho);
        let pk = pk_truncated(&q, 0.0, &opts).unwrap();
        pass &= check(
            (pk.value - rho).abs() <= opts.tol,
            format!("rho {rho}: pk_truncated {:.12} (tol {:e})", pk.value, opts.tol),
        );
        let crude = crude_mc(&q, 0.0, 1_000_000, 101).unwrap();
        pass &= check(
            crude.covers(rho),
            format!("rho {rho}: crude {:.6} +- {:.2e}", crude.estimate, crude.half_width),
        );
        let ak = ak_estimate(&q, 0.0, &AkOptions::default(), 102).unwrap();
        pass &= check(
            ak.covers(rho),
            format!("rho {rho}: conditional {:.6} +- {:.2e}", ak.estimate, ak.half_width),
        );
    }
    summary(1, pass, t0, "P(W > 0) = rho by exact series, crude and conditional MC");
    assert!(pass);
}

#[test]
fn criterion_2_mm1_exactness() {
    let t0 = Instant::now();
    let mut pass = true;
    let opts = AkOptions::default();
    for rho in [0.5, 0.9] {
        let q = mm1(rho);
        for level in [1e-1, 1e-2, 1e-3, 1e-4] {
            let x = (rho / level).ln() / (1.0 - rho);
            let exact = rho * (-(1.0 - rho) * x).exp();
            let covered = (0..20u64)
                .filter(|&s| ak_estimate(&q, x, &opts, 1000 + s).unwrap().covers(exact))
                .count();
            pass &= check(
                covered >= 18,
                format!("rho {rho} x {x:.3} (tail {level:e}): covered {covered}/20"),
            );
            let ratio = exact / cramer_lundberg_tail(&q, x).unwrap();
            pass &= check(
                (ratio - rho).abs() <= 1e-10,
                format!("rho {rho} x {x:.3}: exact / Cramer-Lundberg = {ratio:.15}"),
            );
        }
    }
    summary(2, pass, t0, "M/M/1 coverage >= 18/20 and Cramer-Lundberg ratio = rho");
    assert!(pass);
}

struct Point {
    x: f64,
    mc: SimulationEstimate,
}

fn simulate_grid(q: &QueueModel, xs: &[f64], seed: u64) -> Vec<Point> {
    xs.iter()
        .enumerate()
        .map(|(i, &x)| Point {
            x,
            mc: ak_estimate(q, x, &AkOptions::default(), row_seed(seed, i)).unwrap(),
        })
        .collect()
}

/// Worst `|f/MC - 1|` over converged points selected by `keep`, with its location.
fn worst(points: &[Point], keep: impl Fn(f64) -> bool, f: impl Fn(f64) -> f64) -> (f64, f64, usize) {
    let mut out = (0.0, f64::NAN, 0);
    for p in points.iter().filter(|p| p.mc.converged && keep(p.x)) {
        let dev = (f(p.x) / p.mc.estimate - 1.0).abs();
        out.2 += 1;
        if dev > out.0 || out.1.is_nan() {
            out = (dev.max(out.0), p.x, out.2);
        }
    }
    out
}

#[test]
fn criterion_3_figure_reproduction() {
    let t0 = Instant::now();
    let mut pass = true;
    for (alpha, rho) in [(3.1, 0.95), (3.5, 0.8)] {
        let q = pareto(alpha, rho);
        let xhat = threshold_x(&q, 1.0).unwrap();
        let xs = grid(1.0, 4.0 * xhat, 40, true).unwrap();
        let pts = simulate_grid(&q, &xs, 3);
        let unconverged = pts.iter().filter(|p| !p.mc.converged).count();
        let label = format!("alpha {alpha} rho {rho} (x_hat {xhat:.4})");
        let (dh, xh, nh) = worst(&pts, |_| true, |x| h_approx(&q, x).unwrap());
        pass &= check(
            dh <= 0.15,
            format!("{label}: max |H/MC - 1| = {dh:.4} at x {xh:.3} over {nh} points ({unconverged} unconverged)"),
        );
        let (dt, xt, nt) = worst(&pts, |x| x <= 0.5 * xhat, |x| heavy_traffic(&q, x).unwrap());
        pass &= check(
            dt <= 0.15,
            format!("{label}: max |HT/MC - 1| for x <= x_hat/2 = {dt:.4} at x {xt:.3} over {nt} points"),
        );
        let (dl, xl, nl) = worst(&pts, |x| x >= 2.0 * xhat, |x| heavy_tail(&q, x).unwrap());
        pass &= check(
            dl <= 0.15,
            format!("{label}: max |HTail/MC - 1| for x >= 2 x_hat = {dl:.4} at x {xl:.3} over {nl} points"),
        );
    }
    summary(3, pass, t0, "H, heavy-traffic and heavy-tail within 15% of MC on the figure grids");
    assert!(pass);
}

#[test]
fn criterion_4_regime_trend() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut traffic = Vec::new();
    let mut tail = Vec::new();
    for rho in [0.9, 0.95, 0.99] {
        let q = pareto(3.5, rho);
        let xhat = threshold_x(&q, 1.0).unwrap();
        // the log grid plus the two regime boundaries themselves
        let mut xs = grid(1.0, 4.0 * xhat, 40, true).unwrap();
        xs.extend([0.5 * xhat, 2.0 * xhat]);
        xs.sort_by(f64::total_cmp);
        let pts = simulate_grid(&q, &xs, 4);
        let (dt, xt, nt) = worst(&pts, |x| x <= 0.5 * xhat, |x| heavy_traffic(&q, x).unwrap());
        let (dl, xl, nl) = worst(&pts, |x| x >= 2.0 * xhat, |x| heavy_tail(&q, x).unwrap());
        println!("  rho {rho}: HT worst {dt:.4} at x {xt:.2} ({nt} pts); HTail worst {dl:.4} at x {xl:.2} ({nl} pts)");
        traffic.push(dt);
        tail.push(dl);
    }
    let nonincreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    pass &= check(nonincreasing(&traffic), format!("heavy-traffic worst deviations {traffic:.4?}"));
    pass &= check(nonincreasing(&tail), format!("heavy-tail worst deviations {tail:.4?}"));
    summary(4, pass, t0, "worst deviations nonincreasing in rho for alpha 3.5");
    assert!(pass);
}

#[test]
fn criterion_5_subexponential_sums() {
    let t0 = Instant::now();
    let mut pass = true;
    let model = IntegratedTailModel::pareto(3.5).unwrap();
    let mu = model.mean_integrated();
    let (h, x_top) = (0.05, 500.0);
    let budget = ConvolutionBudget::default();
    for bracket in [Bracket::Lower, Bracket::Upper] {
        let lattice = Lattice::discretize(&model, h, x_top + 1.0, bracket).unwrap();
        for n in [2u64, 5, 10] {
            let x0 = f64::max(50.0, 5.0 * n as f64 * mu);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for x in grid(x0, x_top, 40, true).unwrap() {
                let r = convolve_tail(&lattice, n, x, budget).unwrap()
                    / subexp_sum_approx(&model, n, x).unwrap();
                lo = lo.min(r);
                hi = hi.max(r);
            }
            pass &= check(
                lo >= 0.95 && hi <= 1.05,
                format!("{bracket:?} bracket, n {n}, x in [{x0:.1}, {x_top}]: ratio in [{lo:.4}, {hi:.4}]"),
            );
        }
    }
    summary(5, pass, t0, "P(S_n > x) / n P(X > x - (n-1) mu) within [0.95, 1.05]");
    assert!(pass);
}

#[test]
fn criterion_6_t_dual_forms() {
    let t0 = Instant::now();
    let mut pass = true;
    for rho in [0.5, 0.8, 0.95] {
        let q = pareto(3.5, rho);
        let mut dev: f64 = 0.0;
        for x in grid(0.1, 200.0, 20, true).unwrap() {
            dev = dev.max((t_tail(&q, x).unwrap() - t_tail_z(&q, x).unwrap()).abs());
        }
        pass &= check(dev <= 1e-6, format!("rho {rho}: max |T - T_z| = {dev:.3e}"));
    }
    summary(6, pass, t0, "series and normal-expectation forms of T agree within 1e-6");
    assert!(pass);
}

#[test]
fn criterion_7_geometric_sums() {
    let t0 = Instant::now();
    let mut pass = true;
    for p in [0.1, 0.05] {
        let g = GeomModel::pareto(3.0, p).unwrap();
        let y = geom_threshold(&g, 1.0).unwrap();
        for x in [0.5 * y, y, 2.0 * y] {
            let mc = crude_geom_mc(&g, x, 10_000_000, 7).unwrap();
            let approx = geom_tail_approx(&g, x).unwrap();
            let r = approx / mc.estimate;
            pass &= check(
                (r - 1.0).abs() <= 0.10,
                format!(
                    "p {p} x {x:.2}: approx {approx:.4e}, MC {:.4e} (rel err {:.3}), ratio {r:.4}",
                    mc.estimate, mc.rel_err
                ),
            );
        }
    }
    summary(7, pass, t0, "geometric-sum approximation within 10% of crude MC");
    assert!(pass);
}

#[test]
fn criterion_8_invariants() {
    let t0 = Instant::now();
    let mut pass = true;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    for _ in 0..10_000 {
        let rho = rng.random_range(1e-9..1.0 - 1e-9);
        let alpha = rng.random_range(2.01..10.0);
        let x = 10f64.powf(rng.random_range(-3.0..6.0));
        let g = gamma_factor(&pareto(alpha, rho), x).unwrap();
        if !(0.0..1.0).contains(&g) {
            bad += 1;
        }
    }
    pass &= check(bad == 0, format!("gamma in [0, 1) at 10^4 random points: {bad} violations"));

    let mut dev: f64 = 0.0;
    for beta in [2.5, 3.0, 4.0] {
        for p in [0.01, 0.05, 0.1, 0.5] {
            let g = GeomModel::pareto(beta, p).unwrap();
            let q = QueueModel::new(g.summand().clone(), 1.0 - p).unwrap();
            for x in grid(0.01, 1e4, 50, true).unwrap() {
                dev = dev.max((geom_tail_approx(&g, x).unwrap() - j_approx(&q, x).unwrap()).abs());
            }
        }
    }
    pass &= check(dev <= 1e-12, format!("geometric-sum approximation vs J under rho = 1 - p: {dev:.2e}"));

    let spec = SweepSpec {
        model_literal: "pareto-it:alpha=3.5".into(),
        queue: pareto(3.5, 0.8),
        x_min: 1.0,
        x_max: 100.0,
        points: 8,
        log_grid: true,
        simulate: Some(AkOptions::default()),
        seed: 42,
    };
    let render = |json: bool| {
        let t = SweepTable::build(&spec).unwrap();
        let mut buf = Vec::new();
        if json {
            t.write_json(&mut buf).unwrap();
        } else {
            t.write_csv(&mut buf).unwrap();
        }
        buf
    };
    pass &= check(render(false) == render(false), "seeded sweep CSV byte-identical".into());
    pass &= check(render(true) == render(true), "seeded sweep JSON byte-identical".into());
    let q = pareto(3.1, 0.95);
    let a = ak_estimate(&q, 60.0, &AkOptions::default(), 9).unwrap();
    let b = ak_estimate(&q, 60.0, &AkOptions::default(), 9).unwrap();
    pass &= check(a == b, "seeded conditional estimate bit-identical".into());

    let q = pareto(3.5, 0.8);
    for x in [5.0, 20.0] {
        let widths: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                pk_truncated(&q, x, &PkOptions { spacing: h, ..PkOptions::default() })
                    .unwrap()
                    .bracket_width()
            })
            .collect();
        let ratios: Vec<f64> = widths.windows(2).map(|w| w[0] / w[1]).collect();
        pass &= check(
            ratios.iter().all(|&r| r > 1.0 && r <= 8.0),
            format!(
                "x {x}: bracket widths {}, halving ratios {ratios:.3?}",
                widths.iter().map(|w| format!("{w:.3e}")).collect::<Vec<_>>().join(" ")
            ),
        );
    }
    summary(8, pass, t0, "gamma bound, J identity, determinism, bracket narrowing");
    assert!(pass);
}
