//! Server-rate profiles, arrival laws and the coefficients of the limit
//! diffusion they induce.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{argument, config, Result};

/// Admissible band for every realized service rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateBand {
    #[serde(default = "RateBand::default_lo")]
    pub mu_lo: f64,
    #[serde(default = "RateBand::default_hi")]
    pub mu_hi: f64,
}

impl RateBand {
    fn default_lo() -> f64 {
        0.1
    }

    fn default_hi() -> f64 {
        10.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_lo > 0.0 && self.mu_lo <= self.mu_hi && self.mu_hi.is_finite()) {
            return config(format!(
                "rate band must satisfy 0 < mu_lo <= mu_hi < inf, got [{}, {}]",
                self.mu_lo, self.mu_hi
            ));
        }
        Ok(())
    }

    pub fn contains(&self, rate: f64) -> bool {
        rate >= self.mu_lo && rate <= self.mu_hi
    }
}

impl Default for RateBand {
    fn default() -> Self {
        Self {
            mu_lo: Self::default_lo(),
            mu_hi: Self::default_hi(),
        }
    }
}

/// One pool of servers: `floor(a n + f(n))` servers, each at rate
/// `b + c n^{-1/2} + g(n)`, with `f(n) = f_coef n^{f_exp}` and
/// `g(n) = g_coef n^{-g_exp}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pool {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub f_coef: f64,
    #[serde(default)]
    pub f_exp: f64,
    #[serde(default)]
    pub g_coef: f64,
    #[serde(default = "Pool::default_g_exp")]
    pub g_exp: f64,
}

impl Pool {
    fn default_g_exp() -> f64 {
        1.0
    }

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self {
            a,
            b,
            c,
            f_coef: 0.0,
            f_exp: 0.0,
            g_coef: 0.0,
            g_exp: 1.0,
        }
    }

    pub fn with_size_deviation(mut self, coef: f64, exp: f64) -> Self {
        self.f_coef = coef;
        self.f_exp = exp;
        self
    }

    pub fn with_rate_deviation(mut self, coef: f64, exp: f64) -> Self {
        self.g_coef = coef;
        self.g_exp = exp;
        self
    }

    pub fn size(&self, n: usize) -> i64 {
        let nf = n as f64;
        let x = self.a * nf + self.f_coef * nf.powf(self.f_exp);
        // 0.2 * 1000 must floor to 200, not 199.
        (x + 1e-9 * x.abs().max(1.0)).floor() as i64
    }

    pub fn rate(&self, n: usize) -> f64 {
        let nf = n as f64;
        self.b + self.c / nf.sqrt() + self.g_coef * nf.powf(-self.g_exp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub pools: Vec<Pool>,
    #[serde(default)]
    pub band: RateBand,
}

impl PoolSpec {
    pub fn new(pools: Vec<Pool>) -> Self {
        Self {
            pools,
            band: RateBand::default(),
        }
    }

    /// All violations, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.band.validate() {
            out.push(e.to_string());
        }
        if self.pools.is_empty() {
            out.push("at least one pool is required".into());
            return out;
        }
        let total: f64 = self.pools.iter().map(|p| p.a).sum();
        if (total - 1.0).abs() > 1e-12 {
            out.push(format!("pool fractions must sum to 1, got {total}"));
        }
        for (i, p) in self.pools.iter().enumerate() {
            if !(p.a > 0.0) {
                out.push(format!("pool {i}: fraction a must be > 0, got {}", p.a));
            }
            if !(p.b > 0.0) {
                out.push(format!("pool {i}: base rate b must be > 0, got {}", p.b));
            }
            if !(0.0..1.0).contains(&p.f_exp) {
                out.push(format!("pool {i}: f_exp must lie in [0, 1), got {}", p.f_exp));
            }
            if !(p.g_exp > 0.0) {
                out.push(format!("pool {i}: g_exp must be > 0, got {}", p.g_exp));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            config(v.join("; "))
        }
    }

    /// First-order mean rate `sum_i a_i b_i`.
    pub fn mean_rate(&self) -> f64 {
        self.pools.iter().map(|p| p.a * p.b).sum()
    }

    /// Limiting essential infimum: smallest base rate among pools.
    pub fn mu_star(&self) -> f64 {
        self.pools
            .iter()
            .filter(|p| p.a > 0.0)
            .map(|p| p.b)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Finite-support law of i.i.d. service rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteRateLaw {
    /// `(rate, probability)` pairs.
    pub support: Vec<(f64, f64)>,
    #[serde(default)]
    pub band: RateBand,
}

impl DiscreteRateLaw {
    pub fn validate(&self) -> Result<()> {
        self.band.validate()?;
        if self.support.iter().all(|&(_, p)| p <= 0.0) {
            return config("rate law has empty support");
        }
        let mut total = 0.0;
        for &(rate, p) in &self.support {
            if p < 0.0 {
                return config(format!("negative probability {p} at rate {rate}"));
            }
            if p > 0.0 && !self.band.contains(rate) {
                return config(format!(
                    "support point {rate} outside [{}, {}]",
                    self.band.mu_lo, self.band.mu_hi
                ));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return config(format!("rate law probabilities sum to {total}, not 1"));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(r, p)| r * p).sum()
    }

    pub fn mu_star(&self) -> f64 {
        self.support
            .iter()
            .filter(|&&(_, p)| p > 0.0)
            .map(|&(r, _)| r)
            .fold(f64::INFINITY, f64::min)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = self.support[0].0;
        for &(rate, p) in &self.support {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = rate;
            if u < acc {
                return rate;
            }
        }
        last
    }
}

/// Realized per-server rates with first- and second-order summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    pub rates: Vec<f64>,
    pub n_realized: usize,
    /// First-order (limit) mean rate the profile is centred on.
    pub mu_limit: f64,
    /// Empirical mean of `rates`.
    pub mu_bar_emp: f64,
    pub mu_star: f64,
    /// `n^{-1/2} sum_k (mu_k - mu_limit)`.
    pub second_order_sum: f64,
    /// Realized size of each pool, in index order (one entry for i.i.d. profiles).
    pub pool_sizes: Vec<usize>,
}

impl RateProfile {
    fn from_rates(rates: Vec<f64>, mu_limit: f64, mu_star: f64, pool_sizes: Vec<usize>) -> Self {
        let n = rates.len();
        let sum: f64 = rates.iter().sum();
        let dev: f64 = rates.iter().map(|r| r - mu_limit).sum();
        Self {
            n_realized: n,
            mu_limit,
            mu_bar_emp: sum / n as f64,
            mu_star,
            second_order_sum: dev / (n as f64).sqrt(),
            pool_sizes,
            rates,
        }
    }

    /// Profile with every server at `rate`.
    pub fn homogeneous(n: usize, rate: f64) -> Self {
        Self::from_rates(vec![rate; n], rate, rate, vec![n])
    }

    /// Profile from explicit rates; `mu_limit` is the empirical mean and
    /// `mu_star` the minimum.
    pub fn from_explicit(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return argument("rate profile needs at least one server");
        }
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return argument(format!("service rates must be positive and finite, got {r}"));
        }
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let n = rates.len();
        Ok(Self::from_rates(rates, mean, min, vec![n]))
    }

    pub fn n(&self) -> usize {
        self.n_realized
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// `#{k : mu_k < mu_star - eps} n^{-1/2}`.
    pub fn count_below(&self, eps: f64) -> f64 {
        let thr = self.mu_star - eps;
        let count = self.rates.iter().filter(|&&r| r < thr).count();
        count as f64 / (self.n_realized as f64).sqrt()
    }
}

/// Build the profile of a pooled system at nominal size `n`.
pub fn build_rate_profile(spec: &PoolSpec, n: usize) -> Result<RateProfile> {
    spec.validate()?;
    if n < spec.pools.len() {
        return config(format!(
            "n = {n} is smaller than the number of pools ({})",
            spec.pools.len()
        ));
    }
    let mut rates = Vec::with_capacity(n + n / 8);
    let mut sizes = Vec::with_capacity(spec.pools.len());
    for (i, pool) in spec.pools.iter().enumerate() {
        let size = pool.size(n);
        if size < 1 {
            return config(format!("pool {i} has {size} servers at n = {n}"));
        }
        let rate = pool.rate(n);
        if !spec.band.contains(rate) {
            return config(format!(
                "pool {i} rate {rate} at n = {n} lies outside [{}, {}]",
                spec.band.mu_lo, spec.band.mu_hi
            ));
        }
        rates.extend(std::iter::repeat_n(rate, size as usize));
        sizes.push(size as usize);
    }
    Ok(RateProfile::from_rates(
        rates,
        spec.mean_rate(),
        spec.mu_star(),
        sizes,
    ))
}

/// Draw `n` i.i.d. rates from a finite-support law.
pub fn build_iid_profile<R: Rng + ?Sized>(
    law: &DiscreteRateLaw,
    n: usize,
    rng: &mut R,
) -> Result<RateProfile> {
    law.validate()?;
    if n == 0 {
        return argument("n must be positive");
    }
    let rates = (0..n).map(|_| law.draw(rng)).collect();
    Ok(RateProfile::from_rates(rates, law.mean(), law.mu_star(), vec![n]))
}

/// Law of one normalized interarrival time (mean 1).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArrivalLaw {
    #[default]
    Exponential,
    Deterministic,
    /// Sum of `k` exponentials scaled to mean 1.
    Erlang { k: u32 },
    /// Two-phase hyperexponential with balanced means: phase 1 with
    /// probability `p` at rate `2p`, phase 2 at rate `2(1-p)`.
    Hyperexp2 { p: f64 },
    /// Uniform on `[1 - width/2, 1 + width/2]`, `width < 2`.
    Uniform { width: f64 },
}

impl ArrivalLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ArrivalLaw::Erlang { k: 0 } => config("erlang order k must be >= 1"),
            ArrivalLaw::Hyperexp2 { p } if !(p > 0.0 && p < 1.0) => {
                config(format!("hyperexp2 p must lie in (0, 1), got {p}"))
            }
            ArrivalLaw::Uniform { width } if !(0.0..2.0).contains(&width) => {
                config(format!("uniform width must lie in [0, 2), got {width}"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        1.0
    }

    /// Squared coefficient of variation (equals the variance, the mean being 1).
    pub fn scv(&self) -> f64 {
        match *self {
            ArrivalLaw::Exponential => 1.0,
            ArrivalLaw::Deterministic => 0.0,
            ArrivalLaw::Erlang { k } => 1.0 / k as f64,
            ArrivalLaw::Hyperexp2 { p } => 1.0 / (2.0 * p * (1.0 - p)) - 1.0,
            ArrivalLaw::Uniform { width } => width * width / 12.0,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ArrivalLaw::Exponential => "exponential".into(),
            ArrivalLaw::Deterministic => "deterministic".into(),
            ArrivalLaw::Erlang { k } => format!("erlang({k})"),
            ArrivalLaw::Hyperexp2 { p } => format!("hyperexp2({p})"),
            ArrivalLaw::Uniform { width } => format!("uniform({width})"),
        }
    }

    /// One strictly positive draw with mean 1.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = match *self {
            ArrivalLaw::Exponential => Exp1.sample(rng),
            ArrivalLaw::Deterministic => 1.0,
            ArrivalLaw::Erlang { k } => {
                let kf = k as f64;
                Gamma::new(kf, 1.0 / kf)
                    .expect("erlang order validated")
                    .sample(rng)
            }
            ArrivalLaw::Hyperexp2 { p } => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<f64>() < p {
                    e / (2.0 * p)
                } else {
                    e / (2.0 * (1.0 - p))
                }
            }
            ArrivalLaw::Uniform { width } => {
                1.0 - width / 2.0 + width * rng.random::<f64>()
            }
        };
        // Exp1 and Gamma can return exactly 0 with negligible probability.
        if u > 0.0 {
            u
        } else {
            f64::MIN_POSITIVE
        }
    }
}

/// Coefficients of the limit diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub lambda: f64,
    pub lambda_hat: f64,
    pub mu_hat: f64,
    pub sigma2: f64,
    pub beta_drift: f64,
    pub mu_star: f64,
}

impl LimitParams {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// Limit coefficients for a pooled spec, with the second-order rate term
/// measured on the realized profile at `n_ref`.
pub fn compute_limit_params(
    spec: &PoolSpec,
    arrival: &ArrivalLaw,
    lambda_hat: f64,
    n_ref: usize,
) -> Result<LimitParams> {
    arrival.validate()?;
    let profile = build_rate_profile(spec, n_ref)?;
    Ok(limit_params_from_profile(&profile, arrival, lambda_hat))
}

/// Limit coefficients read off an already realized profile.
pub fn limit_params_from_profile(
    profile: &RateProfile,
    arrival: &ArrivalLaw,
    lambda_hat: f64,
) -> LimitParams {
    let mu = profile.mu_limit;
    let mu_hat = profile.second_order_sum;
    LimitParams {
        lambda: mu,
        lambda_hat,
        mu_hat,
        sigma2: mu * arrival.scv() + mu,
        beta_drift: lambda_hat - mu_hat,
        mu_star: profile.mu_star,
    }
}

/// `lambda_n = n lambda + sqrt(n) lambda_hat`.
pub fn arrival_rate_for_n(lambda: f64, lambda_hat: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    let rate = nf * lambda + nf.sqrt() * lambda_hat;
    if !(rate > 0.0) {
        return config(format!(
            "arrival rate n*lambda + sqrt(n)*lambda_hat = {rate} is not positive at n = {n}"
        ));
    }
    Ok(rate)
}
