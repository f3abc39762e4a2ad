//! Rate classes and the idle-time metric of the fast class.

use serde::{Deserialize, Serialize};

use crate::error::{argument, config, Result};
use crate::scenario::RateProfile;
use crate::sim::{ClassLabels, PathRecord};

/// Split of servers into slow (`K0`), near-infimum (`K1`) and fast (`K2`)
/// classes: `K0 = {mu < mu* - eps}`, `K1 = {mu* - eps <= mu < alpha}`,
/// `K2 = {mu >= alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassPartition {
    pub epsilon: f64,
    /// Class threshold, in `(mu*, mu* + epsilon)`.
    pub alpha: f64,
}

impl ClassPartition {
    /// `epsilon = 0.1 * spread` (0.1 when all base rates coincide) and
    /// `alpha = mu* + epsilon / 2`.
    pub fn default_for(mu_star: f64, spread: f64) -> Self {
        let epsilon = if spread > 0.0 { 0.1 * spread } else { 0.1 };
        Self {
            epsilon,
            alpha: mu_star + epsilon / 2.0,
        }
    }

    pub fn validate(&self, mu_star: f64) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return config(format!("class epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.alpha > mu_star && self.alpha < mu_star + self.epsilon) {
            return config(format!(
                "class threshold alpha = {} must lie in (mu*, mu* + epsilon) = ({mu_star}, {})",
                self.alpha,
                mu_star + self.epsilon
            ));
        }
        Ok(())
    }

    pub fn class_of(&self, rate: f64, mu_star: f64) -> u8 {
        if rate < mu_star - self.epsilon {
            0
        } else if rate < self.alpha {
            1
        } else {
            2
        }
    }

    pub fn labels(&self, profile: &RateProfile) -> Result<ClassLabels> {
        self.validate(profile.mu_star)?;
        Ok(ClassLabels {
            epsilon: self.epsilon,
            alpha: self.alpha,
            labels: profile
                .rates
                .iter()
                .map(|&r| self.class_of(r, profile.mu_star))
                .collect(),
        })
    }
}

/// `sup_{t <= t_bar} n^{-1/2} #{idle servers in K2}` over recorded times.
pub fn idle_metric(path: &PathRecord, partition: &ClassPartition, t_bar: f64) -> Result<f64> {
    match path.meta.classes {
        Some((eps, alpha)) if eps == partition.epsilon && alpha == partition.alpha => {}
        Some((eps, alpha)) => {
            return argument(format!(
                "path was recorded with partition (epsilon {eps}, alpha {alpha}), \
                 not (epsilon {}, alpha {})",
                partition.epsilon, partition.alpha
            ))
        }
        None => return argument("path carries no class-idle counts"),
    }
    let scale = (path.n() as f64).sqrt();
    Ok(path
        .rows
        .iter()
        .take_while(|r| r.t <= t_bar)
        .map(|r| r.i_class[2] as f64 / scale)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{PathMeta, PathRow, PolicyKind, RunSummary};

    fn synthetic(n: usize, rows: Vec<PathRow>, classes: Option<(f64, f64)>) -> PathRecord {
        PathRecord {
            meta: PathMeta {
                n,
                seed: 0,
                policy: PolicyKind::LowestIndex,
                x0: 0,
                horizon: 1.0,
                lambda_n: 0.0,
                arrival: "none".into(),
                init_fallback: true,
                classes,
            },
            rows,
            summary: RunSummary::default(),
            jobs: None,
        }
    }

    fn idle_row(t: f64, n: u32, fast_idle: u32) -> PathRow {
        PathRow {
            t,
            x: 0,
            q: 0,
            i: n,
            i_class: [0, n - fast_idle, fast_idle],
            a: 0,
            d: 0,
            r: 0,
            idle_rate_integral: 0.0,
        }
    }

    #[test]
    fn classes_of_two_pool_profile() {
        let profile = RateProfile::from_explicit(vec![1.0, 1.0, 2.0, 2.0, 2.0]).unwrap();
        let part = ClassPartition {
            epsilon: 1.0,
            alpha: 1.5,
        };
        assert_eq!(part.labels(&profile).unwrap().labels, vec![1, 1, 2, 2, 2]);
        let bad = ClassPartition {
            epsilon: 0.1,
            alpha: 1.5,
        };
        assert!(bad.labels(&profile).is_err());
    }

    #[test]
    fn homogeneous_profile_has_empty_fast_class() {
        let profile = RateProfile::homogeneous(10, 1.0);
        let part = ClassPartition::default_for(1.0, 0.0);
        let labels = part.labels(&profile).unwrap();
        assert!(labels.labels.iter().all(|&l| l == 1));
        let path = synthetic(
            10,
            vec![idle_row(0.0, 10, 0), idle_row(0.5, 10, 0)],
            Some((part.epsilon, part.alpha)),
        );
        assert_eq!(idle_metric(&path, &part, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn all_idle_fast_servers_give_sqrt_n() {
        let part = ClassPartition {
            epsilon: 1.0,
            alpha: 1.5,
        };
        let n = 25;
        let path = synthetic(
            n,
            vec![idle_row(0.0, n as u32, n as u32), idle_row(1.0, n as u32, n as u32)],
            Some((1.0, 1.5)),
        );
        assert_eq!(idle_metric(&path, &part, 1.0).unwrap(), 5.0);
    }

    #[test]
    fn sup_respects_t_bar() {
        let part = ClassPartition {
            epsilon: 1.0,
            alpha: 1.5,
        };
        let path = synthetic(
            4,
            vec![idle_row(0.0, 4, 0), idle_row(1.0, 4, 2), idle_row(3.0, 4, 4)],
            Some((1.0, 1.5)),
        );
        assert_eq!(idle_metric(&path, &part, 2.0).unwrap(), 1.0);
        assert_eq!(idle_metric(&path, &part, 3.0).unwrap(), 2.0);
    }

    #[test]
    fn mismatched_partition_rejected() {
        let part = ClassPartition {
            epsilon: 1.0,
            alpha: 1.5,
        };
        let path = synthetic(4, vec![idle_row(0.0, 4, 0)], Some((1.0, 1.2)));
        assert!(idle_metric(&path, &part, 1.0).is_err());
        let path = synthetic(4, vec![idle_row(0.0, 4, 0)], None);
        assert!(idle_metric(&path, &part, 1.0).is_err());
    }
}
