use mg1_core::mc_oracle::{
    ak_estimate, ak_replication, compound_geometric_sample, convolve_tail, crude_mc, pk_truncated,
    replication_rng, ConvolutionBudget, RunningMoments,
};
use mg1_core::transition::threshold_x;
use mg1_core::{AkOptions, Error, IntegratedTailModel, Lattice, Method, PkOptions, QueueModel};

fn two_point() -> Lattice {
    Lattice::from_points(&[(1.0, 0.5), (2.0, 0.5)], None).unwrap()
}

fn mm1(rho: f64) -> QueueModel {
    QueueModel::new(IntegratedTailModel::exponential(1.0).unwrap(), rho).unwrap()
}

fn pareto(alpha: f64, rho: f64) -> QueueModel {
    QueueModel::new(IntegratedTailModel::pareto(alpha).unwrap(), rho).unwrap()
}

#[test]
fn convolution_enumerations() {
    let l = two_point();
    let b = ConvolutionBudget::default();
    assert_eq!(convolve_tail(&l, 1, 1.5, b).unwrap(), 0.5);
    assert!((convolve_tail(&l, 2, 2.5, b).unwrap() - 0.75).abs() < 1e-15);
    assert!((convolve_tail(&l, 3, 3.5, b).unwrap() - 0.875).abs() < 1e-15);
    let tiny = ConvolutionBudget { max_cells: 10 };
    assert!(matches!(convolve_tail(&l, 50, 60.0, tiny), Err(Error::Resource { .. })));
}

#[test]
fn ak_is_unbiased_on_a_lattice() {
    let q = QueueModel::new(IntegratedTailModel::lattice(two_point()), 0.5).unwrap();
    let opts = PkOptions::default();
    for x in [2.5, 3.5, 3.0] {
        let exact = pk_truncated(&q, x, &opts).unwrap();
        assert_eq!(exact.lower, exact.upper);
        let mut m = RunningMoments::default();
        for i in 0..1_000_000u64 {
            m.push(ak_replication(&q, x, &mut replication_rng(99, i)));
        }
        let err = (m.mean - exact.value).abs();
        assert!(err <= 4.0 * m.std_error(), "x {x}: {} vs {}", m.mean, exact.value);
    }
}

#[test]
fn pk_examples() {
    let opts = PkOptions::default();
    for rho in [0.3, 0.8, 0.95] {
        let v = pk_truncated(&pareto(3.5, rho), 0.0, &opts).unwrap();
        assert!((v.value - rho).abs() <= opts.tol, "rho {rho}: {}", v.value);
    }
    let v = pk_truncated(&mm1(0.5), 2.0, &opts).unwrap();
    let exact = 0.5 * (-1f64).exp();
    let (lo, hi) = v.enclosure();
    assert!(lo <= exact && exact <= hi);
    assert!((v.value - exact).abs() <= v.bracket_width());
    assert!(pk_truncated(&pareto(3.5, 1e-9), 5.0, &opts).unwrap().value < 1e-8);
}

#[test]
fn truncation_bound_decreases_with_depth() {
    let q = pareto(3.5, 0.8);
    let mut prev: Option<(u64, f64)> = None;
    for tol in [1e-4, 1e-6, 1e-8, 1e-10, 1e-12] {
        let v = pk_truncated(&q, 5.0, &PkOptions { tol, ..PkOptions::default() }).unwrap();
        assert!(v.truncation_bound <= tol && v.truncation_bound >= 0.0);
        assert!((0.0..=1.0).contains(&v.value));
        if let Some((n, b)) = prev {
            assert!(v.truncation_n > n && v.truncation_bound < b);
        }
        prev = Some((v.truncation_n, v.truncation_bound));
    }
}

#[test]
fn brackets_narrow_and_enclose() {
    let q = mm1(0.5);
    let exact = 0.5 * (-1f64).exp();
    let mut prev: Option<f64> = None;
    for h in [0.2, 0.1, 0.05, 0.025] {
        let v = pk_truncated(&q, 2.0, &PkOptions { spacing: h, ..PkOptions::default() }).unwrap();
        let (lo, hi) = v.enclosure();
        assert!(lo <= exact && exact <= hi, "h {h}");
        if let Some(w) = prev {
            let r = w / v.bracket_width();
            assert!(r > 1.0 && r <= 8.0, "h {h}: ratio {r}");
        }
        prev = Some(v.bracket_width());
    }
}

#[test]
fn compound_sample_hits_zero_with_probability_one_minus_rho() {
    let n = 1_000_000u64;
    for (q, rho) in [(pareto(3.5, 0.8), 0.8), (mm1(0.5), 0.5)] {
        let positive = (0..n)
            .filter(|&i| compound_geometric_sample(&q, &mut replication_rng(3, i)) > 0.0)
            .count() as f64;
        let se = (rho * (1.0 - rho) / n as f64).sqrt();
        assert!((positive / n as f64 - rho).abs() <= 4.0 * se);
    }
}

#[test]
fn mm1_tail_by_both_estimators() {
    let q = mm1(0.5);
    let exact = 0.5 * (-1f64).exp();
    let crude = crude_mc(&q, 2.0, 1_000_000, 7).unwrap();
    assert_eq!(crude.method, Method::Crude);
    assert!(crude.covers(exact), "{crude:?}");
    let ak = ak_estimate(&q, 2.0, &AkOptions::default(), 7).unwrap();
    assert_eq!(ak.method, Method::AsmussenKroese);
    assert!(ak.converged && ak.rel_err <= 0.05);
    assert!(ak.covers(exact), "{ak:?}");
}

#[test]
fn ak_matches_exact_series_in_the_far_tail() {
    let q = pareto(3.5, 0.8);
    let exact = pk_truncated(&q, 100.0, &PkOptions::default()).unwrap();
    let ak = ak_estimate(&q, 100.0, &AkOptions::default(), 21).unwrap();
    assert!(ak.converged);
    let (lo, hi) = exact.enclosure();
    assert!(
        ak.estimate + ak.half_width >= lo && ak.estimate - ak.half_width <= hi,
        "{ak:?} vs [{lo}, {hi}]"
    );
}

#[test]
fn conditional_estimator_needs_far_fewer_samples() {
    // Samples needed for relative error 0.05 at 99%, predicted from the
    // per-replication variance: n = (z sigma / (0.05 p))^2. Near 2 x_hat the
    // event is mostly many moderate summands, where conditioning on the
    // maximum gains little; this fails there and holds from about 5 x_hat.
    let q = pareto(3.5, 0.8);
    let xhat = threshold_x(&q, 1.0).unwrap();
    let z = 2.5758;
    for x in [2.0 * xhat, 3.0 * xhat, 5.0 * xhat] {
        let ak = ak_estimate(&q, x, &AkOptions::default(), 5).unwrap();
        assert!(ak.converged);
        let p = ak.estimate;
        let per_rep_var = (ak.half_width / z).powi(2) * ak.n_samples as f64;
        let need_ak = per_rep_var * (z / (0.05 * p)).powi(2);
        let need_crude = p * (1.0 - p) * (z / (0.05 * p)).powi(2);
        assert!(need_ak * 10.0 <= need_crude, "x {x}: {need_ak} vs {need_crude}");
    }
}

#[test]
fn estimates_are_deterministic() {
    let q = pareto(3.1, 0.95);
    let opts = AkOptions::default();
    let a = ak_estimate(&q, 50.0, &opts, 1234).unwrap();
    let b = ak_estimate(&q, 50.0, &opts, 1234).unwrap();
    assert_eq!(a, b);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = one.install(|| ak_estimate(&q, 50.0, &opts, 1234).unwrap());
    assert_eq!(a.estimate.to_bits(), c.estimate.to_bits());
    assert_eq!(a.half_width.to_bits(), c.half_width.to_bits());
    assert_eq!(a.n_samples, c.n_samples);
    let d = ak_estimate(&q, 50.0, &opts, 1235).unwrap();
    assert_ne!(a.estimate, d.estimate);
    let e = crude_mc(&q, 50.0, 200_000, 9).unwrap();
    assert_eq!(e, crude_mc(&q, 50.0, 200_000, 9).unwrap());
}

#[test]
fn ak_at_zero_is_rho() {
    for rho in [0.3, 0.8, 0.95] {
        let ak = ak_estimate(&pareto(3.5, rho), 0.0, &AkOptions::default(), 17).unwrap();
        assert!(ak.covers(rho), "{ak:?}");
    }
}
