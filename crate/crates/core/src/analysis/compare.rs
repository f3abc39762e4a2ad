use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{argument, Result};
use crate::experiment::{final_scaled, run_replication, RunSpec, Setup};
use crate::replicate::run_indexed;
use crate::sim::PolicyKind;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub se: f64,
    /// Half-width of the 95% normal interval.
    pub half_width: f64,
}

impl MeanCi {
    pub fn of(xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        let se = (var / m).sqrt();
        Self {
            mean,
            se,
            half_width: Z95 * se,
        }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn overlaps(&self, other: &MeanCi) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }
}

/// Difference of two independent means, `a - b`.
pub fn difference(a: &MeanCi, b: &MeanCi) -> MeanCi {
    let se = (a.se * a.se + b.se * b.se).sqrt();
    MeanCi {
        mean: a.mean - b.mean,
        se,
        half_width: Z95 * se,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub reps: usize,
    /// `X^(t_probe)`.
    pub x_hat: MeanCi,
    /// `int_0^{t_probe} Q^(s) ds`.
    pub q_hat_integral: MeanCi,
    /// Per-replication values `(X^(t_probe), int Q^)`.
    pub samples: Vec<(f64, f64)>,
}

/// Independent replications of every policy on the same setup; streams
/// differ across policies (no common random numbers).
pub fn policy_comparison(
    cfg: &ScenarioConfig,
    setup: &Setup,
    policies: &[PolicyKind],
    t_probe: f64,
    reps: usize,
    workers: Option<usize>,
) -> Result<Vec<PolicySummary>> {
    if reps == 0 {
        return argument("policy comparison needs at least one replication");
    }
    if !(t_probe > 0.0) {
        return argument(format!("t_probe must be positive, got {t_probe}"));
    }
    let sq = (setup.n_realized() as f64).sqrt();
    policies
        .iter()
        .map(|&policy| {
            let samples = run_indexed(reps, workers, |rep| {
                let (path, _) = run_replication(cfg, setup, &RunSpec::new(policy, rep, t_probe))?;
                Ok((final_scaled(&path), path.summary.queue_integral / sq))
            })?;
            let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
            let qs: Vec<f64> = samples.iter().map(|s| s.1).collect();
            Ok(PolicySummary {
                policy,
                reps,
                x_hat: MeanCi::of(&xs),
                q_hat_integral: MeanCi::of(&qs),
                samples,
            })
        })
        .collect()
}
