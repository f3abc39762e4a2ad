//! Random server subset, one service-time sample per sampled server, and
//! the resulting routing priority (Rank).
//!
//! Server indices are 0-based; rank values run from 1 (lowest priority) to
//! `n` (highest).

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::scenario::RateProfile;

/// `r = floor(n^beta_r)`, at least 1 and at most `n`.
pub fn sample_count(n: usize, beta_r: f64) -> usize {
    let x = (n as f64).powf(beta_r);
    let r = (x + 1e-9 * x.max(1.0)).floor() as usize;
    r.clamp(1, n.max(1))
}

/// Sampling exponent must lie in (1/2, 1].
pub fn check_beta_r(beta_r: f64) -> Result<()> {
    if beta_r > 0.5 && beta_r <= 1.0 {
        Ok(())
    } else {
        argument(format!(
            "sampling exponent beta_r = {beta_r} is outside the admissible range (1/2, 1]"
        ))
    }
}

/// Uniformly random size-`r` subset of `0..n`, sorted ascending.
pub fn draw_subset<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<Vec<usize>> {
    if r > n {
        return argument(format!("cannot sample {r} servers out of {n}"));
    }
    let mut subset = index::sample(rng, n, r).into_vec();
    subset.sort_unstable();
    Ok(subset)
}

/// One exponential service duration per server in `subset`, aligned with it.
pub fn draw_samples<R: Rng + ?Sized>(
    subset: &[usize],
    profile: &RateProfile,
    rng: &mut R,
) -> Result<Vec<f64>> {
    subset
        .iter()
        .map(|&k| match profile.rates.get(k) {
            Some(&rate) => {
                let e: f64 = Exp1.sample(rng);
                Ok(e / rate)
            }
            None => argument(format!("server {k} out of range for n = {}", profile.n())),
        })
        .collect()
}

/// Rank permutation: sampled servers get `1..=r` ordered by increasing
/// estimated rate `1/sigma` (equal samples: lower index ranks lower);
/// unsampled servers get `r+1..=n` in index order.
pub fn build_rank(n: usize, subset: &[usize], samples: &[f64]) -> Result<Vec<u32>> {
    if subset.len() != samples.len() {
        return argument("samples must be given for exactly the sampled servers");
    }
    let mut sampled = vec![false; n];
    for &k in subset {
        if k >= n {
            return argument(format!("server {k} out of range for n = {n}"));
        }
        if sampled[k] {
            return argument(format!("server {k} sampled twice"));
        }
        sampled[k] = true;
    }
    let mut order: Vec<usize> = (0..subset.len()).collect();
    // Increasing 1/sigma is decreasing sigma.
    order.sort_by(|&i, &j| {
        samples[j]
            .total_cmp(&samples[i])
            .then(subset[i].cmp(&subset[j]))
    });
    let mut rank = vec![0u32; n];
    for (pos, &i) in order.iter().enumerate() {
        rank[subset[i]] = pos as u32 + 1;
    }
    let mut next = subset.len() as u32 + 1;
    for k in 0..n {
        if !sampled[k] {
            rank[k] = next;
            next += 1;
        }
    }
    Ok(rank)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub n: usize,
    pub r: usize,
    /// Sampled servers, ascending.
    pub subset: Vec<usize>,
    /// `samples[i]` is the observed duration of server `subset[i]`.
    pub samples: Vec<f64>,
    pub rank: Vec<u32>,
}

impl SamplePlan {
    /// Draw a complete plan with `r = floor(n^beta_r)`.
    pub fn draw<R: Rng + ?Sized>(profile: &RateProfile, beta_r: f64, rng: &mut R) -> Result<Self> {
        check_beta_r(beta_r)?;
        let n = profile.n();
        let r = sample_count(n, beta_r);
        Self::draw_with_count(profile, r, rng)
    }

    pub fn draw_with_count<R: Rng + ?Sized>(
        profile: &RateProfile,
        r: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let n = profile.n();
        let subset = draw_subset(n, r, rng)?;
        let samples = draw_samples(&subset, profile, rng)?;
        Self::from_parts(n, subset, samples)
    }

    pub fn from_parts(n: usize, subset: Vec<usize>, samples: Vec<f64>) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| !(**s > 0.0)) {
            return argument(format!("service samples must be positive, got {s}"));
        }
        let rank = build_rank(n, &subset, &samples)?;
        let mut order: Vec<usize> = (0..subset.len()).collect();
        order.sort_by_key(|&i| subset[i]);
        let subset: Vec<usize> = order.iter().map(|&i| subset[i]).collect();
        let samples: Vec<f64> = order.iter().map(|&i| samples[i]).collect();
        Ok(Self {
            n,
            r: subset.len(),
            subset,
            samples,
            rank,
        })
    }

    /// `mu_hat_k = 1 / sigma_k` for sampled servers.
    pub fn mu_hat(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.subset
            .iter()
            .zip(&self.samples)
            .map(|(&k, &s)| (k, 1.0 / s))
    }

    pub fn sample_of(&self, server: usize) -> Option<f64> {
        self.subset
            .binary_search(&server)
            .ok()
            .map(|i| self.samples[i])
    }

    /// Diagnostic CSV: `server,sampled,sigma,rank`; `sigma` empty when unsampled.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["server", "sampled", "sigma", "rank"])?;
        for k in 0..self.n {
            let sigma = self.sample_of(k);
            w.write_record([
                k.to_string(),
                u8::from(sigma.is_some()).to_string(),
                sigma.map(|s| format!("{s:.17e}")).unwrap_or_default(),
                self.rank[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn is_permutation(rank: &[u32]) -> bool {
        let mut seen = vec![false; rank.len()];
        rank.iter().all(|&r| {
            let i = r as usize;
            (1..=rank.len()).contains(&i) && !std::mem::replace(&mut seen[i - 1], true)
        })
    }

    #[test]
    fn full_subset_is_forced() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(draw_subset(5, 5, &mut rng).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(draw_subset(5, 6, &mut rng).is_err());
    }

    #[test]
    fn sample_count_examples() {
        // 100^0.6 = 10^1.2 = 15.85
        assert_eq!(sample_count(100, 0.6), 15);
        assert_eq!(sample_count(1600, 0.6), 83);
        assert_eq!(sample_count(64, 1.0), 64);
        assert!(check_beta_r(0.4).is_err());
        assert!(check_beta_r(0.5).is_err());
        assert!(check_beta_r(1.0).is_ok());
    }

    #[test]
    fn inclusion_frequency_is_uniform() {
        let (n, r, draws) = (10_000usize, 100usize, 100_000usize);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = vec![0u32; n];
        for _ in 0..draws {
            for k in draw_subset(n, r, &mut rng).unwrap() {
                counts[k] += 1;
            }
        }
        let p = r as f64 / n as f64;
        let tol = 3.0 * (p * (1.0 - p) / draws as f64).sqrt();
        // Check a spread of indices; with 10^4 indices a few 3-sigma
        // excursions are expected, so bound the overall fraction too.
        let outside = counts
            .iter()
            .filter(|&&c| (c as f64 / draws as f64 - p).abs() > tol)
            .count();
        assert!(outside < n / 100, "{outside} indices outside 3 s.e.");
        for k in [0, 1, n / 2, n - 1] {
            let f = counts[k] as f64 / draws as f64;
            assert!((f - p).abs() <= 1.5 * tol, "index {k}: {f}");
        }
    }

    #[test]
    fn exponential_sample_mean() {
        let profile = RateProfile::homogeneous(1, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| draw_samples(&[0], &profile, &mut rng).unwrap()[0])
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 0.5).abs() <= 3.0 * 0.5 / (draws as f64).sqrt(), "{mean}");
    }

    #[test]
    fn samples_reproducible_and_empty() {
        let profile = RateProfile::homogeneous(3, 1.0);
        let a = draw_samples(&[1], &profile, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = draw_samples(&[1], &profile, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        let none = draw_samples(&[], &profile, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn rank_worked_example() {
        // Servers 2 and 4 (1-based) sampled with sigma 0.5 and 2.0.
        let rank = build_rank(5, &[1, 3], &[0.5, 2.0]).unwrap();
        assert_eq!(rank, vec![3, 2, 4, 1, 5]);
    }

    #[test]
    fn rank_without_samples_is_identity() {
        assert_eq!(build_rank(3, &[], &[]).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn rank_all_sampled_increasing_sigma() {
        let n = 6;
        let subset: Vec<usize> = (0..n).collect();
        let samples: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let rank = build_rank(n, &subset, &samples).unwrap();
        let expected: Vec<u32> = (0..n).map(|k| (n - k) as u32).collect();
        assert_eq!(rank, expected);
    }

    #[test]
    fn rank_ties_broken_by_index() {
        let rank = build_rank(4, &[0, 2, 3], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(rank, vec![1, 4, 2, 3]);
    }

    #[test]
    fn csv_export() {
        let plan = SamplePlan::from_parts(3, vec![2], vec![0.25]).unwrap();
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "server,sampled,sigma,rank");
        assert_eq!(lines[1], "0,0,,2");
        assert!(lines[3].starts_with("2,1,2.5"));
        assert!(lines[3].ends_with(",1"));
    }

    #[test]
    fn randomized_plans_are_valid_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..10_000u32 {
            let n = 1 + (trial % 64) as usize;
            let r = rng.random_range(0..=n);
            let profile = RateProfile::homogeneous(n, 1.0 + (trial % 3) as f64);
            let plan = SamplePlan::draw_with_count(&profile, r, &mut rng).unwrap();
            assert!(is_permutation(&plan.rank));
        }
    }

    #[test]
    fn orderings_are_exchangeable_for_equal_rates() {
        // n = 4, r = 3, all rates equal: each of the 3! orderings of the
        // sampled servers should be equally likely.
        let profile = RateProfile::homogeneous(4, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 100_000;
        let mut counts = std::collections::HashMap::<Vec<usize>, u32>::new();
        for _ in 0..trials {
            let plan = SamplePlan::draw_with_count(&profile, 3, &mut rng).unwrap();
            let mut by_rank = plan.subset.clone();
            by_rank.sort_by_key(|&k| plan.rank[k]);
            let pattern: Vec<usize> = by_rank
                .iter()
                .map(|k| plan.subset.binary_search(k).unwrap())
                .collect();
            *counts.entry(pattern).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = trials as f64 / 6.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 5 degrees of freedom, 0.999 quantile.
        assert!(chi2 < 20.515, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn rank_invariants(
            n in 1usize..64,
            seed in any::<u64>(),
            frac in 0.0f64..=1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = ((n as f64) * frac).round() as usize;
            let profile = RateProfile::homogeneous(n, 1.5);
            let plan = SamplePlan::draw_with_count(&profile, r, &mut rng).unwrap();
            prop_assert!(is_permutation(&plan.rank));
            let sampled: Vec<bool> = (0..n).map(|k| plan.sample_of(k).is_some()).collect();
            for k in 0..n {
                prop_assert_eq!(sampled[k], plan.rank[k] as usize <= r);
                for l in 0..n {
                    if sampled[k] && sampled[l] && k != l {
                        let (sk, sl) = (plan.sample_of(k).unwrap(), plan.sample_of(l).unwrap());
                        prop_assert_eq!(plan.rank[k] < plan.rank[l], 1.0 / sk < 1.0 / sl);
                    }
                    if !sampled[k] && !sampled[l] {
                        prop_assert_eq!(plan.rank[k] < plan.rank[l], k < l);
                    }
                }
            }
            if r > 0 && r < n {
                let max_sampled = (0..n).filter(|&k| sampled[k]).map(|k| plan.rank[k]).max();
                let min_unsampled = (0..n).filter(|&k| !sampled[k]).map(|k| plan.rank[k]).min();
                prop_assert!(min_unsampled > max_sampled);
            }
        }

        #[test]
        fn smaller_sample_never_lowers_rank(
            samples in proptest::collection::vec(0.01f64..10.0, 1..20),
            which in any::<proptest::sample::Index>(),
            shrink in 0.0f64..1.0,
        ) {
            let n = samples.len() + 3;
            let subset: Vec<usize> = (0..samples.len()).collect();
            let i = which.index(samples.len());
            let before = build_rank(n, &subset, &samples).unwrap();
            let mut changed = samples.clone();
            changed[i] *= shrink.max(1e-6);
            let after = build_rank(n, &subset, &changed).unwrap();
            prop_assert!(after[i] >= before[i]);
        }
    }
}
