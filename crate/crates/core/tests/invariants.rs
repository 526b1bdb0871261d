//! Property tests for the module invariants, checked against independent
//! oracles: two-pass batch statistics for the rolling window, and the
//! statrs error function / normal quantile for the Gaussian primitives.

use driftband_core::detector::{Detector, DetectorConfig};
use driftband_core::gaussian::{cdf, erf_approx, ppf, ppf_std, GaussianParams};
use driftband_core::rolling::{RunningGaussian, Sample, TimedBuffer};
use driftband_core::time::{Duration, Timestamp};
use proptest::prelude::*;

/// Two-pass batch oracle: mean and sample variance, with the same rules the
/// running model uses before two samples exist.
fn batch_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 1);
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n >= 2 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        1.0
    };
    (mean, variance)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    // Batch equivalence: pure one-pass updates match two-pass statistics.
    #[test]
    fn welford_matches_batch_oracle(
        scale in prop_oneof![Just(1e-3), Just(1.0), Just(1e3), Just(1e6)],
        raw in prop::collection::vec(-1.0f64..1.0, 2..400),
    ) {
        let values: Vec<f64> = raw.iter().map(|v| v * scale + scale).collect();
        let mut stats = RunningGaussian::init(values[0]).unwrap();
        for &x in &values[1..] {
            stats.update(x);
        }
        let (mean, variance) = batch_stats(&values);
        prop_assert!(rel_err(stats.mean(), mean) <= 1e-9);
        prop_assert!((stats.variance() - variance).abs() <= 1e-9 * variance.max(1e-9));
    }

    // Inversion: revert(update(s, x), x) == s to near machine precision.
    // Tolerances scale with the transient magnitudes: the intermediate mean
    // and sum of squares grow to O(x) and O((x - mean)^2), and that is what
    // the cancellation error is proportional to.
    #[test]
    fn revert_inverts_update(
        seedvals in prop::collection::vec(-1e3f64..1e3, 2..50),
        x in -1e6f64..1e6,
    ) {
        let mut stats = RunningGaussian::init(seedvals[0]).unwrap();
        for &v in &seedvals[1..] {
            stats.update(v);
        }
        let before = stats;
        stats.update(x);
        stats.revert(x).unwrap();
        prop_assert_eq!(stats.count(), before.count());
        let mean_tol = 1e-12 + 1e-14 * (x.abs() + before.mean().abs());
        prop_assert!((stats.mean() - before.mean()).abs() <= mean_tol);
        let delta_sq = (x - before.mean()).powi(2);
        let sum_sq_tol = 1e-9 * before.sum_sq() + 1e-13 * delta_sq + 1e-15;
        prop_assert!((stats.sum_sq() - before.sum_sq()).abs() <= sum_sq_tol);
    }

    // Window equivalence: after arbitrary update/expire interleavings the
    // running stats equal the batch stats of {seed} ∪ {unexpired entries}.
    #[test]
    fn window_matches_batch_oracle_under_expiration(
        steps in prop::collection::vec((0i64..50, -1e3f64..1e3), 5..200),
        max_age_secs in 10i64..500,
    ) {
        let seed_value = 0.5;
        let mut stats = RunningGaussian::init(seed_value).unwrap();
        let mut buffer = TimedBuffer::new(Duration::from_secs(max_age_secs));
        let mut clock = 0i64;
        for &(gap, x) in &steps {
            clock += gap;
            let now = Timestamp::from_secs(clock);
            stats.update(x);
            buffer.push(Sample::new(now, x).unwrap());
            buffer.expire(&mut stats, now);

            let mut window: Vec<f64> = vec![seed_value];
            window.extend(buffer.iter().map(|s| s.value()));
            let (mean, variance) = batch_stats(&window);
            prop_assert_eq!(stats.count() as usize, window.len());
            prop_assert!(rel_err(stats.mean(), mean) <= 1e-7, "mean {} vs {}", stats.mean(), mean);
            prop_assert!(
                (stats.variance() - variance.max(stats.variance_floor())).abs()
                    <= 1e-7 * variance.max(1e-6),
                "var {} vs {}", stats.variance(), variance
            );
        }
        prop_assert!(stats.sum_sq() >= 0.0);
    }

    // Affine equivariance: ppf(q, {mu, s2}) = mu + sqrt(s2) * ppf(q, {0, 1}).
    #[test]
    fn ppf_is_affine_equivariant(
        q in 0.001f64..0.999,
        mean in -1e3f64..1e3,
        sd in 0.01f64..100.0,
    ) {
        let params = GaussianParams::new(mean, sd * sd).unwrap();
        let direct = ppf(q, &params).unwrap();
        let standard = ppf_std(q).unwrap();
        let composed = mean + sd * standard;
        prop_assert!((direct - composed).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    // Symmetry: ppf(q) = -ppf(1 - q) for the standard normal.
    #[test]
    fn ppf_is_symmetric(q in 0.001f64..0.5) {
        let a = ppf_std(q).unwrap();
        let b = ppf_std(1.0 - q).unwrap();
        prop_assert!((a + b).abs() <= 1e-9, "a={a} b={b}");
    }

    // The anomaly score stays in [0, 1] and flags exactly the samples
    // outside the published pre-update limits.
    #[test]
    fn flags_match_limits(values in prop::collection::vec(-50.0f64..50.0, 2..300)) {
        let config = DetectorConfig::new(Duration::from_hours(10), Duration::from_mins(10))
            .unwrap()
            .with_warmup(Duration::ZERO)
            .unwrap();
        let mut samples = values.iter().enumerate()
            .map(|(i, &v)| Sample::new(Timestamp::from_secs(i as i64 * 60), v).unwrap());
        let mut det = Detector::new(config, samples.next().unwrap()).unwrap();
        for sample in samples {
            let out = det.process(sample);
            prop_assert!((0.0..=1.0).contains(&out.score));
            let outside = out.value < out.limits.lower || out.value > out.limits.upper;
            // Skip the knife-edge where score == quantile within 1e-9.
            if (out.score - 0.9973).abs() > 1e-9 {
                prop_assert_eq!(out.is_anomaly, outside,
                    "value {} limits [{}, {}] score {}",
                    out.value, out.limits.lower, out.limits.upper, out.score);
            }
        }
    }
}

#[test]
fn erf_matches_statrs_to_1e7_on_dense_grid() {
    let mut max_err: f64 = 0.0;
    for i in 0..=12_000 {
        let z = -6.0 + i as f64 * (12.0 / 12_000.0);
        let err = (erf_approx(z) - statrs::function::erf::erf(z)).abs();
        max_err = max_err.max(err);
    }
    assert!(max_err <= 1e-7, "max |erf_approx - erf| = {max_err:e}");
}

#[test]
fn cdf_is_monotone_on_dense_grid() {
    // The series evaluation carries ~n_terms * eps of rounding, which shows
    // up as jitter of order 1e-14 where the CDF is within 1e-14 of 0 or 1.
    // Monotonicity must be exact up to that noise floor, and strict in the
    // central region where the density dwarfs it.
    const TAIL_NOISE: f64 = 5e-14;
    let params = GaussianParams::new(3.0, 2.25).unwrap();
    let (mean, sd) = (params.mean(), params.std_dev());
    let mut previous = f64::NEG_INFINITY;
    for i in 0..10_000 {
        let x = mean - 8.0 * sd + i as f64 * (16.0 * sd / 10_000.0);
        let p = cdf(x, &params);
        assert!(
            p >= previous - TAIL_NOISE,
            "cdf decreased at x={x}: {p} < {previous}"
        );
        if (1e-6..=1.0 - 1e-6).contains(&previous) {
            assert!(p > previous, "cdf flat/decreasing mid-range at x={x}");
        }
        previous = p;
    }
}

#[test]
fn cdf_ppf_roundtrip_on_quantile_grid() {
    let grid = [0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.9973, 0.99865, 0.9999];
    for (mean, variance) in [(0.0, 1.0), (10.0, 4.0), (-3.5, 0.0625), (1e4, 1e6)] {
        let params = GaussianParams::new(mean, variance).unwrap();
        for &q in &grid {
            let x = ppf(q, &params).unwrap();
            let back = cdf(x, &params);
            assert!(
                (back - q).abs() <= 1e-8,
                "roundtrip q={q} mean={mean} var={variance}: {back}"
            );
        }
    }
}

#[test]
fn ppf_agrees_with_statrs_inverse_cdf() {
    use statrs::distribution::ContinuousCDF;
    let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    for q in [0.0013499, 0.01, 0.1587, 0.5, 0.8413447, 0.99, 0.9986501] {
        let ours = ppf_std(q).unwrap();
        let reference = normal.inverse_cdf(q);
        assert!(
            (ours - reference).abs() <= 1e-6,
            "q={q}: {ours} vs {reference}"
        );
    }
}

#[test]
fn mirror_coherence_on_a_long_mixed_stream() {
    let config = DetectorConfig::new(Duration::from_hours(4), Duration::from_mins(20))
        .unwrap()
        .with_warmup(Duration::ZERO)
        .unwrap();
    let mut det = Detector::new(config, Sample::new(Timestamp::EPOCH, 2.0).unwrap()).unwrap();
    for i in 1..4000i64 {
        let x = 2.0 + ((i * 37 % 101) as f64 - 50.0) / 40.0;
        det.process(Sample::new(Timestamp::from_secs(i * 30), x).unwrap());
        let direct = det.stats();
        let mirror = det.stats_mirror();
        assert_eq!(direct.count(), mirror.count());
        assert!(rel_err(-mirror.mean(), direct.mean()) <= 1e-9 || direct.mean().abs() < 1e-12);
        assert!(rel_err(mirror.sum_sq(), direct.sum_sq()) <= 1e-9);
    }
}
