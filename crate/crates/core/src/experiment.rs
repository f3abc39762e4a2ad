//! Per-size setup and single replications of a configured scenario.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::analysis::ClassPartition;
use crate::config::{RateSource, ScenarioConfig};
use crate::error::Result;
use crate::sampling::SamplePlan;
use crate::scenario::{
    arrival_rate_for_n, build_iid_profile, build_rate_profile, limit_params_from_profile,
    LimitParams, RateProfile,
};
use crate::seed::{derive_seed, policy_master, stream, Purpose, StreamRng};
use crate::sim::{
    initial_occupancy, simulate, Arrivals, ClassLabels, PathRecord, PolicyKind, RecordMode,
    RecordOptions, SimInput,
};

/// Everything about a scenario at one nominal size that does not vary
/// across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    /// Nominal size (a ladder entry); seeds are keyed on it.
    pub n: usize,
    pub profile: RateProfile,
    /// `n lambda + sqrt(n) lambda_hat` with the realized `n`.
    pub lambda_n: f64,
    pub x0: usize,
    pub limit: LimitParams,
    pub partition: ClassPartition,
    pub labels: ClassLabels,
}

impl Setup {
    pub fn n_realized(&self) -> usize {
        self.profile.n()
    }
}

fn profile_at(cfg: &ScenarioConfig, n: usize) -> Result<RateProfile> {
    match &cfg.rates {
        RateSource::Pools(spec) => build_rate_profile(spec, n),
        // one environment per size, shared by every replication
        RateSource::Iid(law) => {
            let mut rng = stream(cfg.seed, n as u64, 0, Purpose::RateProfile);
            build_iid_profile(law, n, &mut rng)
        }
    }
}

/// Limit coefficients, with the second-order rate term taken at `n_ref`.
pub fn limit_params(cfg: &ScenarioConfig) -> Result<LimitParams> {
    cfg.arrival.validate()?;
    let reference = profile_at(cfg, cfg.n_ref())?;
    Ok(limit_params_from_profile(&reference, &cfg.arrival, cfg.lambda_hat))
}

pub fn setup(cfg: &ScenarioConfig, n: usize) -> Result<Setup> {
    cfg.validate()?;
    let profile = profile_at(cfg, n)?;
    let limit = limit_params(cfg)?;
    let nr = profile.n();
    let lambda_n = arrival_rate_for_n(limit.lambda, cfg.lambda_hat, nr)?;
    let partition = cfg.partition();
    let labels = partition.labels(&profile)?;
    Ok(Setup {
        n,
        x0: initial_occupancy(nr, cfg.xi0),
        profile,
        lambda_n,
        limit,
        partition,
        labels,
    })
}

/// Seed identifiers of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationSeeds {
    pub plan: u64,
    pub simulation: u64,
}

pub fn replication_seeds(master: u64, policy: PolicyKind, n: usize, rep: usize) -> ReplicationSeeds {
    let m = policy_master(master, policy.code());
    ReplicationSeeds {
        plan: derive_seed(m, n as u64, rep as u64, Purpose::SamplePlan),
        simulation: derive_seed(m, n as u64, rep as u64, Purpose::Simulation),
    }
}

/// Options for [`run_replication`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub policy: PolicyKind,
    pub rep: usize,
    pub horizon: f64,
    pub mode: RecordMode,
    pub classes: bool,
    pub job_log: bool,
}

impl RunSpec {
    pub fn new(policy: PolicyKind, rep: usize, horizon: f64) -> Self {
        Self {
            policy,
            rep,
            horizon,
            mode: RecordMode::SummaryOnly,
            classes: false,
            job_log: false,
        }
    }

    pub fn full(mut self) -> Self {
        self.mode = RecordMode::Full;
        self
    }

    pub fn with_mode(mut self, mode: RecordMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_classes(mut self) -> Self {
        self.classes = true;
        self
    }

    pub fn with_job_log(mut self) -> Self {
        self.job_log = true;
        self
    }
}

/// Draw a fresh sample plan (when the policy uses one) and simulate.
pub fn run_replication(
    cfg: &ScenarioConfig,
    setup: &Setup,
    spec: &RunSpec,
) -> Result<(PathRecord, Option<SamplePlan>)> {
    let seeds = replication_seeds(cfg.seed, spec.policy, setup.n, spec.rep);
    let plan = if spec.policy.needs_plan() {
        let mut rng = StreamRng::seed_from_u64(seeds.plan);
        Some(SamplePlan::draw(&setup.profile, cfg.beta_r, &mut rng)?)
    } else {
        None
    };
    let input = SimInput {
        profile: &setup.profile,
        arrivals: Arrivals::Renewal {
            law: cfg.arrival,
            lambda_n: setup.lambda_n,
        },
        policy: spec.policy,
        plan: plan.as_ref(),
        x0: setup.x0,
        horizon: spec.horizon,
    };
    let mut opts = RecordOptions {
        mode: spec.mode,
        classes: None,
        job_log: spec.job_log,
        seed: seeds.simulation,
    };
    if spec.classes {
        opts.classes = Some(setup.labels.clone());
    }
    let mut rng = StreamRng::seed_from_u64(seeds.simulation);
    let path = simulate(&input, &opts, &mut rng)?;
    Ok((path, plan))
}

/// `n^{-1/2} (X - n)` at the end of a run.
pub fn final_scaled(path: &PathRecord) -> f64 {
    let n = path.n() as f64;
    (path.summary.x as f64 - n) / n.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pool() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(
            r#"
seed = 3
lambda_hat = -1.0
ladder = [100, 400, 1600]
[rates]
kind = "pools"
pools = [{ a = 0.2, b = 1.0 }, { a = 0.8, b = 2.0 }]
"#,
        )
        .unwrap()
    }

    #[test]
    fn setup_matches_two_pool_limits() {
        let cfg = two_pool();
        let s = setup(&cfg, 400).unwrap();
        assert_eq!(s.n_realized(), 400);
        assert!((s.limit.sigma2 - 3.6).abs() < 1e-12);
        assert!((s.limit.beta_drift + 1.0).abs() < 1e-12);
        assert_eq!(s.limit.mu_star, 1.0);
        assert!((s.lambda_n - (400.0 * 1.8 - 20.0)).abs() < 1e-9);
        assert_eq!(s.x0, 400);
    }

    #[test]
    fn replications_are_reproducible_and_distinct() {
        let cfg = two_pool();
        let s = setup(&cfg, 100).unwrap();
        let spec = RunSpec::new(PolicyKind::Pi0, 5, 2.0).full();
        let (a, pa) = run_replication(&cfg, &s, &spec).unwrap();
        let (b, pb) = run_replication(&cfg, &s, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(pa, pb);
        let (c, _) = run_replication(&cfg, &s, &RunSpec { rep: 6, ..spec }).unwrap();
        assert_ne!(a.rows, c.rows);
        let (d, pd) = run_replication(&cfg, &s, &RunSpec::new(PolicyKind::Fsf, 5, 2.0).full()).unwrap();
        assert!(pd.is_none());
        assert_ne!(a.rows, d.rows);
    }

    #[test]
    fn policies_get_independent_streams() {
        let a = replication_seeds(1, PolicyKind::Pi0, 100, 0);
        let b = replication_seeds(1, PolicyKind::Fsf, 100, 0);
        assert_ne!(a.simulation, b.simulation);
        assert_ne!(a.plan, a.simulation);
    }
}
