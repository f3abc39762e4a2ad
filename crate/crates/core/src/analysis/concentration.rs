//! Ranking-error events: how many of `l ~ c n^beta` exponential samples
//! exceed `theta_n = gamma log n`, by Monte Carlo and by Chernoff bounds.
//!
//! Event 1 (slow servers look slow): at most `n^{1/2+kappa}` of the
//! `l1 = floor(c1 n^beta)` draws from `Exp(phi)` reach `theta_n`.
//! Event 2 (fast servers look slow): at least `n^{1/2-kappa}` of the
//! `l2 = floor(c2 n^beta)` draws from `Exp(psi)` reach `theta_n`.
//! Both probabilities vanish as `n` grows when
//! `phi gamma < beta - 1/2 - kappa < beta - 1/2 + kappa < psi gamma`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub phi: f64,
    pub psi: f64,
    pub beta_exp: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub kappa: f64,
    /// Chernoff parameter of event 1 (`alpha_n = nu log n`). `None` picks
    /// the minimizing value at each `n`.
    #[serde(default)]
    pub nu: Option<f64>,
    /// Chernoff parameter of event 2.
    #[serde(default = "ConcentrationConfig::default_eta")]
    pub eta: f64,
}

impl ConcentrationConfig {
    fn default_eta() -> f64 {
        1.0
    }

    pub fn new(phi: f64, psi: f64, beta_exp: f64, kappa: f64, gamma: f64) -> Self {
        Self {
            phi,
            psi,
            beta_exp,
            c1: 1.0,
            c2: 1.0,
            gamma,
            kappa,
            nu: None,
            eta: 1.0,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let positive = [
            ("phi", self.phi),
            ("c1", self.c1),
            ("c2", self.c2),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("eta", self.eta),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                v.push(format!("concentration.{name} must be > 0, got {value}"));
            }
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0) {
                v.push(format!("concentration.nu must be > 0, got {nu}"));
            }
        }
        if !(self.psi > self.phi) {
            v.push(format!("concentration.psi ({}) must exceed phi ({})", self.psi, self.phi));
        }
        if !(self.beta_exp > 0.5) {
            v.push(format!("concentration.beta_exp must be > 1/2, got {}", self.beta_exp));
        }
        let lo = self.beta_exp - 0.5 - self.kappa;
        let hi = self.beta_exp - 0.5 + self.kappa;
        if !(self.phi * self.gamma < lo) {
            v.push(format!(
                "exponent condition violated: phi*gamma = {} must be < beta - 1/2 - kappa = {lo}",
                self.phi * self.gamma
            ));
        }
        if !(hi < self.psi * self.gamma) {
            v.push(format!(
                "exponent condition violated: beta - 1/2 + kappa = {hi} must be < psi*gamma = {}",
                self.psi * self.gamma
            ));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            config(v.join("; "))
        }
    }

    fn draws(&self, c: f64, n: usize) -> usize {
        let x = c * (n as f64).powf(self.beta_exp);
        (x + 1e-9 * x.max(1.0)).floor() as usize
    }

    pub fn l1(&self, n: usize) -> usize {
        self.draws(self.c1, n)
    }

    pub fn l2(&self, n: usize) -> usize {
        self.draws(self.c2, n)
    }

    pub fn theta(&self, n: usize) -> f64 {
        self.gamma * (n as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub n: usize,
    pub reps: usize,
    pub l1: usize,
    pub l2: usize,
    pub theta: f64,
    pub p1_hat: f64,
    pub p2_hat: f64,
    pub se1: f64,
    pub se2: f64,
    /// False when `n^{1/2+kappa} >= l1`, making event 1 certain.
    pub regime_reached: bool,
}

/// Monte-Carlo estimates of both event probabilities.
pub fn concentration_mc<R: Rng + ?Sized>(
    cfg: &ConcentrationConfig,
    n: usize,
    reps: usize,
    rng: &mut R,
) -> Result<ConcentrationEstimate> {
    cfg.validate()?;
    if reps == 0 {
        return config("concentration estimate needs at least one repetition");
    }
    let nf = n as f64;
    let theta = cfg.theta(n);
    let (l1, l2) = (cfg.l1(n), cfg.l2(n));
    let upper1 = nf.powf(0.5 + cfg.kappa);
    let lower2 = nf.powf(0.5 - cfg.kappa);
    let (mut hits1, mut hits2) = (0usize, 0usize);
    for _ in 0..reps {
        let count1 = (0..l1)
            .filter(|_| {
                let e: f64 = Exp1.sample(rng);
                e / cfg.phi >= theta
            })
            .count();
        let count2 = (0..l2)
            .filter(|_| {
                let e: f64 = Exp1.sample(rng);
                e / cfg.psi >= theta
            })
            .count();
        hits1 += usize::from(count1 as f64 <= upper1);
        hits2 += usize::from(count2 as f64 >= lower2);
    }
    let r = reps as f64;
    let (p1, p2) = (hits1 as f64 / r, hits2 as f64 / r);
    Ok(ConcentrationEstimate {
        n,
        reps,
        l1,
        l2,
        theta,
        p1_hat: p1,
        p2_hat: p2,
        se1: (p1 * (1.0 - p1) / r).sqrt(),
        se2: (p2 * (1.0 - p2) / r).sqrt(),
        regime_reached: upper1 < l1 as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationBounds {
    pub n: f64,
    /// Natural log of the event-1 bound.
    pub log_bound1: f64,
    pub log_bound2: f64,
    /// Bounds clipped to `[0, 1]`.
    pub bound1: f64,
    pub bound2: f64,
    pub nu: f64,
    pub eta: f64,
    /// The raw bound is at least 1 and says nothing.
    pub vacuous1: bool,
    pub vacuous2: bool,
}

/// Chernoff upper bounds on both event probabilities at size `n`.
pub fn concentration_bounds(cfg: &ConcentrationConfig, n: f64) -> Result<ConcentrationBounds> {
    cfg.validate()?;
    if !(n >= 1.0) {
        return config(format!("concentration bounds need n >= 1, got {n}"));
    }
    Ok(bounds_at_log_n(cfg, n.ln(), n))
}

/// Same as [`concentration_bounds`] but parameterized by `log n`, so that very
/// large `n` can be scanned without overflow.
pub fn concentration_bounds_log_n(cfg: &ConcentrationConfig, log_n: f64) -> Result<ConcentrationBounds> {
    cfg.validate()?;
    if !(log_n >= 0.0) {
        return config(format!("log n must be >= 0, got {log_n}"));
    }
    Ok(bounds_at_log_n(cfg, log_n, log_n.exp()))
}

fn bounds_at_log_n(cfg: &ConcentrationConfig, log_n: f64, n: f64) -> ConcentrationBounds {
    let pow = |e: f64| (e * log_n).exp();
    // Event 1: P <= exp(alpha s - (c1 n^beta - 1) n^{-phi gamma} (1 - e^{-alpha}))
    // with alpha = nu log n.
    let s1 = pow(0.5 + cfg.kappa);
    let c_term = (cfg.c1 * pow(cfg.beta_exp) - 1.0).max(0.0) * pow(-cfg.phi * cfg.gamma);
    let nu = match cfg.nu {
        Some(nu) => nu,
        // d/dnu = 0 at n^{-nu} = s1 / c_term
        None if log_n > 0.0 && c_term > s1 => (c_term / s1).ln() / log_n,
        None => 0.0,
    };
    let log_bound1 = if nu > 0.0 {
        nu * log_n * s1 - c_term * (1.0 - pow(-nu))
    } else {
        0.0
    };
    // Event 2: P <= e^{-eta s2} E e^{eta count} <= exp(-eta s2 + c2 n^beta n^{-psi gamma} (e^eta - 1)).
    let s2 = pow(0.5 - cfg.kappa);
    let eta = cfg.eta;
    let log_bound2 = -eta * s2 + cfg.c2 * pow(cfg.beta_exp - cfg.psi * cfg.gamma) * eta.exp_m1();
    ConcentrationBounds {
        n,
        log_bound1,
        log_bound2,
        bound1: log_bound1.min(0.0).exp(),
        bound2: log_bound2.min(0.0).exp(),
        nu,
        eta,
        vacuous1: log_bound1 >= 0.0,
        vacuous2: log_bound2 >= 0.0,
    }
}

/// Index into `log_ns` from which both log-bounds are nonincreasing and
/// non-vacuous, or `None` when no such suffix of length >= 2 exists.
pub fn monotone_from(cfg: &ConcentrationConfig, log_ns: &[f64]) -> Result<Option<usize>> {
    let b: Vec<ConcentrationBounds> = log_ns
        .iter()
        .map(|&l| concentration_bounds_log_n(cfg, l))
        .collect::<Result<_>>()?;
    let ok_pair = |i: usize| {
        b[i + 1].log_bound1 <= b[i].log_bound1
            && b[i + 1].log_bound2 <= b[i].log_bound2
            && !b[i].vacuous1
            && !b[i].vacuous2
            && !b[i + 1].vacuous1
            && !b[i + 1].vacuous2
    };
    if b.len() < 2 {
        return Ok(None);
    }
    let mut start = b.len() - 1;
    while start > 0 && ok_pair(start - 1) {
        start -= 1;
    }
    Ok((start < b.len() - 1).then_some(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> ConcentrationConfig {
        ConcentrationConfig::new(1.0, 2.0, 0.75, 0.05, 0.18)
    }

    #[test]
    fn reference_config_satisfies_exponent_condition() {
        let cfg = reference();
        // 0.18 < 0.2 and 0.3 < 0.36
        assert!(cfg.phi * cfg.gamma < cfg.beta_exp - 0.5 - cfg.kappa);
        assert!(cfg.beta_exp - 0.5 + cfg.kappa < cfg.psi * cfg.gamma);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn violating_config_rejected() {
        let mut cfg = reference();
        cfg.gamma = 0.25;
        assert!(cfg.validate().is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(concentration_mc(&cfg, 10_000, 10, &mut rng).is_err());
        assert!(concentration_bounds(&cfg, 1e4).is_err());
    }

    #[test]
    fn reference_estimates_at_ten_thousand() {
        let cfg = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let est = concentration_mc(&cfg, 10_000, 200, &mut rng).unwrap();
        assert_eq!(est.l1, 1000);
        assert!(est.regime_reached);
        assert!(est.p1_hat <= 0.05, "{est:?}");
        assert!(est.p2_hat <= 0.05, "{est:?}");
    }

    #[test]
    fn tiny_n_makes_event_one_certain() {
        let cfg = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est = concentration_mc(&cfg, 2, 50, &mut rng).unwrap();
        assert!(!est.regime_reached);
        assert_eq!(est.p1_hat, 1.0);
    }

    #[test]
    fn bounds_are_vacuous_at_n_one() {
        let b = concentration_bounds(&reference(), 1.0).unwrap();
        assert!(b.log_bound1 >= 0.0);
        assert!(b.vacuous1);
        assert_eq!(b.bound1, 1.0);
    }

    #[test]
    fn bounds_decrease_along_ladder() {
        let cfg = reference();
        let b: Vec<ConcentrationBounds> = [1e4, 1e6, 1e8]
            .iter()
            .map(|&n| concentration_bounds(&cfg, n).unwrap())
            .collect();
        for w in b.windows(2) {
            assert!(w[1].log_bound1 < w[0].log_bound1, "{w:?}");
            assert!(w[1].log_bound2 < w[0].log_bound2, "{w:?}");
        }
        assert!(!b[0].vacuous1 && !b[0].vacuous2);
    }

    #[test]
    fn optimized_nu_beats_fixed_choices() {
        let cfg = reference();
        let auto = concentration_bounds(&cfg, 1e6).unwrap();
        for nu in [0.001, 0.01, 0.05, 0.1, 0.5, 1.0] {
            let fixed = concentration_bounds(&ConcentrationConfig { nu: Some(nu), ..cfg }, 1e6).unwrap();
            assert!(auto.log_bound1 <= fixed.log_bound1 + 1e-9, "nu {nu}");
        }
    }

    #[test]
    fn bounds_dominate_exact_binomial_tails() {
        // Exact tail probabilities of the binomial counts, summed in log space.
        fn ln_binom_pmf(l: usize, k: usize, p: f64) -> f64 {
            let lf = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
            lf(l) - lf(k) - lf(l - k) + k as f64 * p.ln() + (l - k) as f64 * (1.0 - p).ln()
        }
        let cfg = reference();
        let n = 10_000usize;
        let nf = n as f64;
        let l = cfg.l1(n);
        let p1 = (-cfg.phi * cfg.theta(n)).exp();
        let p2 = (-cfg.psi * cfg.theta(n)).exp();
        let k1 = nf.powf(0.5 + cfg.kappa).floor() as usize;
        let k2 = nf.powf(0.5 - cfg.kappa).ceil() as usize;
        let tail1: f64 = (0..=k1).map(|k| ln_binom_pmf(l, k, p1).exp()).sum();
        let tail2: f64 = (k2..=l).map(|k| ln_binom_pmf(l, k, p2).exp()).sum();
        let b = concentration_bounds(&cfg, nf).unwrap();
        assert!(b.bound1 >= tail1, "{} < {tail1}", b.bound1);
        assert!(b.bound2 >= tail2, "{} < {tail2}", b.bound2);
    }

    fn valid_config() -> impl Strategy<Value = ConcentrationConfig> {
        (0.5f64..2.0, 1.2f64..3.0, 0.6f64..1.0, 0.01f64..0.05, 0.5f64..2.0, 0.5f64..2.0)
            .prop_filter_map("exponent condition with margin", |(phi, ratio, beta, kappa, c1, c2)| {
                let psi = phi * ratio;
                let lo = beta - 0.5 - kappa;
                let hi = beta - 0.5 + kappa;
                // gamma midway in (hi / psi, lo / phi)
                let (g_lo, g_hi) = (hi / psi, lo / phi);
                if g_hi - g_lo < 0.05 {
                    return None;
                }
                let mut cfg = ConcentrationConfig::new(phi, psi, beta, kappa, 0.5 * (g_lo + g_hi));
                cfg.c1 = c1;
                cfg.c2 = c2;
                Some(cfg)
            })
    }

    proptest! {
        #[test]
        fn bounds_eventually_nonincreasing(cfg in valid_config()) {
            prop_assert!(cfg.validate().is_ok());
            let log_ns: Vec<f64> = (1..=60).map(|k| k as f64 * 10f64.ln() * 2.0).collect();
            let start = monotone_from(&cfg, &log_ns).unwrap();
            prop_assert!(start.is_some(), "{cfg:?}");
        }
    }
}
