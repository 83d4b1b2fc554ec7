//! Interval estimates and goodness-of-fit checks for Monte Carlo output.
//!
//! Proportions get Wilson score intervals, which behave sensibly for
//! estimates near 0 and 1 where the usual normal interval collapses.

use crate::error::{Error, Result};
use serde::Serialize;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Normal};

/// A point estimate with a two-sided confidence interval.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CiEstimate {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub n_samples: u64,
}

impl CiEstimate {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn check_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::ParamDomain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    Ok(level)
}

/// Two-sided standard normal quantile for a confidence level, e.g.
/// 0.95 -> 1.9599...
pub fn z_for_level(level: f64) -> Result<f64> {
    check_level(level)?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// Wilson score interval for a Bernoulli proportion.
pub fn proportion_ci(successes: u64, trials: u64, level: f64) -> Result<CiEstimate> {
    if trials == 0 {
        return Err(Error::ParamDomain("proportion needs at least one trial".into()));
    }
    if successes > trials {
        return Err(Error::ParamDomain(format!(
            "successes {successes} exceed trials {trials}"
        )));
    }
    let z = z_for_level(level)?;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = phat + z2 / (2.0 * n);
    let spread = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = ((centre - spread) / denom).clamp(0.0, 1.0);
    let hi = ((centre + spread) / denom).clamp(0.0, 1.0);
    Ok(CiEstimate {
        point: phat,
        lo,
        hi,
        level,
        n_samples: trials,
    })
}

/// Streaming mean and variance (Welford's update).
#[derive(Clone, Copy, Debug, Default)]
pub struct OnlineStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl OnlineStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Normal-theory interval for the mean. Fine for the sample sizes used
    /// here (hundreds and up).
    pub fn mean_ci(&self, level: f64) -> Result<CiEstimate> {
        if self.n == 0 {
            return Err(Error::ParamDomain("mean of an empty sample".into()));
        }
        let z = z_for_level(level)?;
        let se = (self.variance() / self.n as f64).sqrt();
        Ok(CiEstimate {
            point: self.mean,
            lo: self.mean - z * se,
            hi: self.mean + z * se,
            level,
            n_samples: self.n,
        })
    }
}

/// Outcome of a chi-square test after bin pooling.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
    /// Bin count after pooling sparse cells.
    pub bins: usize,
}

const MIN_EXPECTED_PER_BIN: f64 = 5.0;

/// Pools adjacent cells until every pooled cell's `weights` entry reaches
/// `MIN_EXPECTED_PER_BIN`. Returns index ranges; deterministic.
fn pool_bins(weights: &[f64]) -> Vec<(usize, usize)> {
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc >= MIN_EXPECTED_PER_BIN {
            ranges.push((start, i + 1));
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < weights.len() {
        // Trailing light cells merge into the last pooled range.
        match ranges.last_mut() {
            Some(last) => last.1 = weights.len(),
            None => ranges.push((0, weights.len())),
        }
    }
    ranges
}

fn chi2_p_value(statistic: f64, df: u64) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive df");
    1.0 - dist.cdf(statistic)
}

/// Goodness of fit of observed counts against a reference distribution given
/// as probabilities over the same cells. Probabilities may sum to less than
/// one if the caller already folded the tail into a final cell.
pub fn chi2_goodness_of_fit(observed: &[u64], probs: &[f64]) -> Result<Chi2Result> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::Input(
            "observed and reference cells must align and be nonempty".into(),
        ));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Input("no observations".into()));
    }
    let expected: Vec<f64> = probs.iter().map(|q| q * total as f64).collect();
    let ranges = pool_bins(&expected);
    let mut stat = 0.0;
    for &(a, b) in &ranges {
        let obs: u64 = observed[a..b].iter().sum();
        let exp: f64 = expected[a..b].iter().sum();
        if exp <= 0.0 {
            if obs > 0 {
                return Err(Error::Input(format!(
                    "observed mass in cells {a}..{b} where the reference has none"
                )));
            }
            continue;
        }
        let d = obs as f64 - exp;
        stat += d * d / exp;
    }
    let df = ranges.len().saturating_sub(1) as u64;
    Ok(Chi2Result {
        statistic: stat,
        df,
        p_value: chi2_p_value(stat, df),
        bins: ranges.len(),
    })
}

/// Two-sample chi-square test of homogeneity on aligned count vectors.
pub fn chi2_two_sample(a: &[u64], b: &[u64]) -> Result<Chi2Result> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Input("samples must align and be nonempty".into()));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::Input("both samples must be nonempty".into()));
    }
    let (na, nb) = (na as f64, nb as f64);
    // Pool on the smaller side's expected counts so both sides clear the
    // threshold.
    let frac = na.min(nb) / (na + nb);
    let pooled_weight: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x + y) as f64 * frac)
        .collect();
    let ranges = pool_bins(&pooled_weight);
    let mut stat = 0.0;
    let mut used = 0usize;
    for &(lo, hi) in &ranges {
        let oa: f64 = a[lo..hi].iter().sum::<u64>() as f64;
        let ob: f64 = b[lo..hi].iter().sum::<u64>() as f64;
        let tot = oa + ob;
        if tot == 0.0 {
            continue;
        }
        used += 1;
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    let df = used.saturating_sub(1) as u64;
    Ok(Chi2Result {
        statistic: stat,
        df,
        p_value: chi2_p_value(stat, df),
        bins: used,
    })
}

/// Smallest k with P(X <= k) >= q for X ~ Bi(trials, prob).
fn binomial_quantile(dist: &Binomial, trials: u64, q: f64) -> u64 {
    let mut lo = 0u64;
    let mut hi = trials;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if dist.cdf(mid) >= q {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Exact equal-tailed interval [lo, hi] for Bi(trials, prob): at most
/// (1-level)/2 probability sits strictly below lo, and at most that much
/// strictly above hi.
pub fn binomial_interval(trials: u64, prob: f64, level: f64) -> Result<(u64, u64)> {
    check_level(level)?;
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::ParamDomain(format!(
            "binomial prob must lie in [0, 1], got {prob}"
        )));
    }
    if trials == 0 || prob == 0.0 {
        return Ok((0, 0));
    }
    if prob == 1.0 {
        return Ok((trials, trials));
    }
    let dist = Binomial::new(prob, trials)
        .map_err(|e| Error::ParamDomain(format!("binomial interval: {e}")))?;
    let alpha = 1.0 - level;
    let lo = binomial_quantile(&dist, trials, alpha / 2.0);
    let hi = binomial_quantile(&dist, trials, 1.0 - alpha / 2.0);
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_zero_successes() {
        let ci = proportion_ci(0, 100, 0.95).unwrap();
        assert_eq!(ci.point, 0.0);
        assert_eq!(ci.lo, 0.0);
        // z^2 / (n + z^2) with z = 1.95996...
        assert!(
            (ci.hi - 0.03699).abs() < 2e-4,
            "upper bound {} should be close to 0.03699",
            ci.hi
        );
    }

    #[test]
    fn wilson_symmetric_at_half() {
        let ci = proportion_ci(50, 100, 0.95).unwrap();
        assert_eq!(ci.point, 0.5);
        assert!(((ci.lo + ci.hi) - 1.0).abs() < 1e-12);
        assert!(ci.lo < 0.5 && ci.hi > 0.5);
    }

    #[test]
    fn wilson_full_successes_hits_one_exactly() {
        let ci = proportion_ci(100, 100, 0.95).unwrap();
        assert_eq!(ci.hi, 1.0);
        assert!(ci.lo > 0.9 && ci.lo < 1.0);
    }

    #[test]
    fn wilson_rejects_bad_input() {
        assert!(proportion_ci(5, 0, 0.95).is_err());
        assert!(proportion_ci(5, 4, 0.95).is_err());
        assert!(proportion_ci(1, 4, 1.0).is_err());
    }

    #[test]
    fn wilson_shrinks_with_more_trials() {
        let a = proportion_ci(10, 100, 0.95).unwrap();
        let b = proportion_ci(100, 1000, 0.95).unwrap();
        let c = proportion_ci(1000, 10000, 0.95).unwrap();
        assert!(a.half_width() > b.half_width());
        assert!(b.half_width() > c.half_width());
    }

    #[test]
    fn online_stats_matches_closed_form() {
        let mut s = OnlineStats::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            s.push(x);
        }
        assert_eq!(s.count(), 4);
        assert!((s.mean() - 2.5).abs() < 1e-15);
        assert!((s.variance() - 5.0 / 3.0).abs() < 1e-12);
        let ci = s.mean_ci(0.95).unwrap();
        assert!(ci.lo < 2.5 && ci.hi > 2.5);
    }

    #[test]
    fn chi2_uniform_counts_fit_uniform_reference() {
        let observed = [250u64, 251, 249, 250];
        let probs = [0.25; 4];
        let r = chi2_goodness_of_fit(&observed, &probs).unwrap();
        assert_eq!(r.df, 3);
        assert!(r.p_value > 0.9, "p = {}", r.p_value);
    }

    #[test]
    fn chi2_detects_gross_mismatch() {
        let observed = [900u64, 50, 25, 25];
        let probs = [0.25; 4];
        let r = chi2_goodness_of_fit(&observed, &probs).unwrap();
        assert!(r.p_value < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn chi2_two_sample_same_source_passes() {
        let a = [400u64, 300, 200, 100];
        let b = [410u64, 290, 205, 95];
        let r = chi2_two_sample(&a, &b).unwrap();
        assert!(r.p_value > 0.5, "p = {}", r.p_value);
    }

    #[test]
    fn chi2_pools_sparse_cells() {
        // Heavy head, long sparse tail: pooling must kick in rather than
        // produce unstable terms.
        let mut a = vec![0u64; 30];
        let mut b = vec![0u64; 30];
        a[0] = 1000;
        b[0] = 1000;
        for i in 1..30 {
            a[i] = 1;
            b[i] = 1;
        }
        let r = chi2_two_sample(&a, &b).unwrap();
        assert!(r.bins < 30);
        assert!(r.p_value > 0.5);
    }

    #[test]
    fn binomial_interval_small_case_by_hand() {
        // Bi(4, 1/2): cdf(0) = 1/16 >= 0.0005 so lo = 0; cdf(3) = 15/16
        // < 0.9995 so hi = 4.
        assert_eq!(binomial_interval(4, 0.5, 0.999).unwrap(), (0, 4));
        // Degenerate ends.
        assert_eq!(binomial_interval(9, 0.0, 0.99).unwrap(), (0, 0));
        assert_eq!(binomial_interval(9, 1.0, 0.99).unwrap(), (9, 9));
    }

    #[test]
    fn binomial_interval_brackets_the_mean() {
        let (lo, hi) = binomial_interval(499_500, 0.0015, 0.999).unwrap();
        let mean = 499_500.0 * 0.0015;
        assert!((lo as f64) < mean && mean < hi as f64);
        assert!(hi - lo < 400, "interval [{lo}, {hi}] suspiciously wide");
    }

    #[test]
    fn z_quantile_reference_values() {
        assert!((z_for_level(0.95).unwrap() - 1.959964).abs() < 1e-5);
        assert!((z_for_level(0.99).unwrap() - 2.575829).abs() < 1e-5);
    }
}
