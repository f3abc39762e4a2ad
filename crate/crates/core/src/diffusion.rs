//! The limit diffusion `xi(t) = xi0 + sigma w(t) + beta t + mu* int_0^t xi(s)^- ds`,
//! scaled simulation paths, and Monte-Carlo marginals of the scaled queue.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{argument, Error, Result};
use crate::experiment::{final_scaled, run_replication, RunSpec, Setup};
use crate::replicate::run_indexed;
use crate::scenario::LimitParams;
use crate::seed::{stream, Purpose};
use crate::sim::{PathRecord, PolicyKind};

/// Law of the initial value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Xi0 {
    Point { value: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Xi0 {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Xi0::Point { value } => value,
            Xi0::Normal { mean, sd } => Normal::new(mean, sd)
                .expect("validated standard deviation")
                .sample(rng),
        }
    }
}

impl Default for Xi0 {
    fn default() -> Self {
        Xi0::Point { value: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeParams {
    pub xi0: Xi0,
    /// Zero gives the deterministic flow.
    pub sigma: f64,
    pub beta_drift: f64,
    pub mu_star: f64,
}

impl SdeParams {
    pub fn from_limit(limit: &LimitParams, xi0: Xi0) -> Self {
        Self {
            xi0,
            sigma: limit.sigma(),
            beta_drift: limit.beta_drift,
            mu_star: limit.mu_star,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return argument(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.mu_star >= 0.0) {
            return argument(format!("mu* must be >= 0, got {}", self.mu_star));
        }
        if !self.beta_drift.is_finite() {
            return argument("drift must be finite");
        }
        if let Xi0::Normal { sd, .. } = self.xi0 {
            if !(sd >= 0.0) {
                return argument(format!("initial sd must be >= 0, got {sd}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdePath {
    pub dt: f64,
    /// Values at `0, dt, 2 dt, ...`.
    pub values: Vec<f64>,
}

impl SdePath {
    pub fn t_end(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }
}

fn steps(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0 && dt <= t_end && t_end.is_finite()) {
        return argument(format!("need 0 < dt <= T, got dt = {dt}, T = {t_end}"));
    }
    let m = t_end / dt;
    Ok((m + 1e-9 * m).floor() as usize)
}

#[inline]
fn step<R: Rng + ?Sized>(p: &SdeParams, x: f64, dt: f64, sqdt: f64, rng: &mut R) -> f64 {
    let drift = p.beta_drift + p.mu_star * (-x).max(0.0);
    let noise = if p.sigma > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        p.sigma * sqdt * z
    } else {
        0.0
    };
    x + drift * dt + noise
}

/// Explicit Euler–Maruyama on the grid `{0, dt, ..., floor(T/dt) dt}`.
pub fn euler_maruyama<R: Rng + ?Sized>(
    params: &SdeParams,
    dt: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<SdePath> {
    params.validate()?;
    let m = steps(dt, t_end)?;
    let sqdt = dt.sqrt();
    let mut values = Vec::with_capacity(m + 1);
    let mut x = params.xi0.sample(rng);
    values.push(x);
    for _ in 0..m {
        x = step(params, x, dt, sqdt, rng);
        values.push(x);
    }
    Ok(SdePath { dt, values })
}

/// Last grid value of an Euler–Maruyama path, without storing the path.
pub fn euler_terminal<R: Rng + ?Sized>(
    params: &SdeParams,
    dt: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<f64> {
    params.validate()?;
    let m = steps(dt, t_end)?;
    let sqdt = dt.sqrt();
    let mut x = params.xi0.sample(rng);
    for _ in 0..m {
        x = step(params, x, dt, sqdt, rng);
    }
    Ok(x)
}

/// `samples` independent terminal values; sample `i` uses stream
/// `(seed, 0, i, Sde)`, so the batch does not depend on `workers`.
pub fn sde_batch(
    params: &SdeParams,
    dt: f64,
    t_end: f64,
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    params.validate()?;
    if t_end != 0.0 {
        steps(dt, t_end)?;
    }
    run_indexed(samples, workers, |i| {
        let mut rng = stream(seed, 0, i as u64, Purpose::Sde);
        if t_end == 0.0 {
            // the initial law itself
            return Ok(params.xi0.sample(&mut rng));
        }
        euler_terminal(params, dt, t_end, &mut rng)
    })
}

/// Single-column CSV with `# key=value` header lines.
pub fn write_sde_csv<W: Write>(
    mut out: W,
    samples: &[f64],
    params: &SdeParams,
    dt: f64,
    t_end: f64,
    seed: u64,
) -> Result<()> {
    match params.xi0 {
        Xi0::Point { value } => writeln!(out, "# xi0=point({value})")?,
        Xi0::Normal { mean, sd } => writeln!(out, "# xi0=normal({mean},{sd})")?,
    }
    writeln!(out, "# sigma={}", params.sigma)?;
    writeln!(out, "# beta={}", params.beta_drift)?;
    writeln!(out, "# mu_star={}", params.mu_star)?;
    writeln!(out, "# dt={dt}")?;
    writeln!(out, "# T={t_end}")?;
    writeln!(out, "# seed={seed}")?;
    writeln!(out, "xi")?;
    for v in samples {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

/// `X^ = n^{-1/2} (X - n)` with `Q^ = X^+` and `I^ = X^-`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPath {
    pub n: usize,
    pub times: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub i_hat: Vec<f64>,
}

impl ScaledPath {
    /// Recover the head counts.
    pub fn unscale(&self) -> Vec<u32> {
        let sq = (self.n as f64).sqrt();
        self.x_hat
            .iter()
            .map(|&x| (x * sq + self.n as f64).round() as u32)
            .collect()
    }
}

pub fn scale_path(path: &PathRecord, n: usize) -> Result<ScaledPath> {
    if path.n() != n {
        return argument(format!("path has {} servers, not {n}", path.n()));
    }
    let sq = (n as f64).sqrt();
    let m = path.rows.len();
    let mut s = ScaledPath {
        n,
        times: Vec::with_capacity(m),
        x_hat: Vec::with_capacity(m),
        q_hat: Vec::with_capacity(m),
        i_hat: Vec::with_capacity(m),
    };
    for r in &path.rows {
        let excess = r.x as i64 - n as i64;
        if r.q as i64 != excess.max(0) || r.i as i64 != (-excess).max(0) {
            return Err(Error::Audit(format!(
                "work-conservation breach at t = {}: X = {}, Q = {}, I = {}",
                r.t, r.x, r.q, r.i
            )));
        }
        let x = excess as f64 / sq;
        s.times.push(r.t);
        s.x_hat.push(x);
        s.q_hat.push(x.max(0.0));
        s.i_hat.push((-x).max(0.0));
    }
    Ok(s)
}

/// `reps` independent values of `X^(t_probe)`, each from a fresh sample
/// plan and arrival stream.
pub fn marginal_samples(
    cfg: &ScenarioConfig,
    setup: &Setup,
    policy: PolicyKind,
    t_probe: f64,
    reps: usize,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    if !(t_probe >= 0.0 && t_probe <= cfg.horizon) {
        return argument(format!(
            "t_probe = {t_probe} must lie in [0, horizon = {}]",
            cfg.horizon
        ));
    }
    if t_probe == 0.0 {
        let n = setup.n_realized() as f64;
        return Ok(vec![(setup.x0 as f64 - n) / n.sqrt(); reps]);
    }
    run_indexed(reps, workers, |rep| {
        let (path, _) = run_replication(cfg, setup, &RunSpec::new(policy, rep, t_probe))?;
        Ok(final_scaled(&path))
    })
}
