//! Small numeric helpers shared by the diagnostics and the test oracles:
//! moments, empirical quantiles, batch-means Monte Carlo standard errors and
//! Kolmogorov-Smirnov distances.

use crate::error::{ErnmError, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator n - 1).
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Quantile of an unsorted sample.
pub fn quantile_of(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile(&sorted, q)
}

/// Monte Carlo standard error of the mean by batch means: the chain is split
/// into `n_batches` equal batches (remainder dropped) and the variance of
/// the batch means estimates the autocorrelation-adjusted variance.
pub fn batch_means_se(xs: &[f64], n_batches: usize) -> Result<f64> {
    if n_batches < 2 || xs.len() < 2 * n_batches {
        return Err(ErnmError::TooFewSamples {
            needed: 2 * n_batches,
            got: xs.len(),
        });
    }
    let batch_len = xs.len() / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| mean(&xs[b * batch_len..(b + 1) * batch_len]))
        .collect();
    Ok((sample_variance(&means) / n_batches as f64).sqrt())
}

/// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b|.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1}
/// exp(-2 k^2 lambda^2).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        total += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * total).clamp(0.0, 1.0)
}

/// Approximate p-value of the two-sample KS test (asymptotic with the small
/// sample correction of Stephens).
pub fn ks_two_sample_p(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d = ks_two_sample_statistic(a, b);
    let ne = a.len() as f64 * b.len() as f64 / (a.len() + b.len()) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// One-sample KS distance between an empirical sample and a reference CDF
/// given as (value, cumulative probability) points in ascending value order.
/// The distance is evaluated at the reference's support points, from both
/// sides of each step.
pub fn ks_distance_vs_cdf(samples: &[f64], cdf: &[(f64, f64)]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let empirical = |x: f64| -> f64 { sorted.partition_point(|&v| v <= x) as f64 / n };
    let mut d: f64 = 0.0;
    let mut prev_f = 0.0;
    for &(x, f) in cdf {
        let e = empirical(x);
        d = d.max((e - f).abs());
        d = d.max((e - prev_f).abs());
        prev_f = f;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
    }

    #[test]
    fn batch_se_shrinks_with_sample_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let short: Vec<f64> = (0..1_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let long: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let se_short = batch_means_se(&short, 20).unwrap();
        let se_long = batch_means_se(&long, 20).unwrap();
        assert!(se_long < se_short);
        // For i.i.d. draws the batch-means SE estimates sigma / sqrt(n).
        let expected = 1.0 / (long.len() as f64).sqrt();
        assert!(se_long / expected < 2.0 && se_long / expected > 0.5);
    }

    #[test]
    fn ks_identical_samples_is_zero() {
        let xs = [0.3, 0.9, 1.4, 2.2];
        assert_eq!(ks_two_sample_statistic(&xs, &xs), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        let a = [0.0, 1.0, 2.0];
        let b = [10.0, 11.0];
        assert_eq!(ks_two_sample_statistic(&a, &b), 1.0);
        let (_, p) = ks_two_sample_p(&a, &b);
        assert!(p < 0.05);
    }

    #[test]
    fn ks_same_distribution_not_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a: Vec<f64> = (0..5_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..5_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let (d, p) = ks_two_sample_p(&a, &b);
        assert!(d < 0.05, "d = {d}");
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn ks_vs_cdf_detects_shift() {
        let uniform_cdf: Vec<(f64, f64)> =
            (0..=100).map(|k| (k as f64 / 100.0, k as f64 / 100.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sample: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_distance_vs_cdf(&sample, &uniform_cdf) < 0.02);
        let shifted: Vec<f64> = sample.iter().map(|x| x * 0.5).collect();
        assert!(ks_distance_vs_cdf(&shifted, &uniform_cdf) > 0.4);
    }
}
