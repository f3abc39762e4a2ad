//! Pathwise lower bound of the scaled queue by the one-sided reflected
//! process driven by the same noise.
//!
//! From a recorded path the driving noise is recovered as
//! `W = X^ - X^(0) - b t - F` with `F = n^{-1/2} int sum_k mu_k I_k ds`,
//! `b = n^{-1/2} (lambda_n - n lambda) - n^{-1/2} sum_k (mu_k - lambda)`.
//! The comparison process solves `Xi = X^(0) + W + b t + mu* int Xi^-` by a
//! forward Euler step on the event grid. When every rate is at least `mu*`,
//! `X^ >= Xi`; slower servers cost a linear slack `v_n t`.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::scenario::{LimitParams, RateProfile};
use crate::sim::PathRecord;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DominanceOptions {
    /// Rate slack; `None` picks the smallest `delta` leaving at most
    /// `floor(n^{1/4})` servers below `mu* - delta`.
    pub delta_n: Option<f64>,
    /// Fixed comparison tolerance; `None` uses `1e-6` plus the Euler slack
    /// `mu* max_gap sup |Xi^-|`.
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceViolation {
    pub t: f64,
    /// `X^(t) - (Xi(t) - v_n t)`, negative.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceAudit {
    pub n: usize,
    pub b: f64,
    pub delta_n: f64,
    pub zeta_n: f64,
    pub v_n: f64,
    pub sup_idle_scaled: f64,
    pub max_gap: f64,
    pub tol: f64,
    /// Smallest `X^ - (Xi - v_n t)` over the path.
    pub min_margin: f64,
    pub times: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub w: Vec<f64>,
    pub xi: Vec<f64>,
    pub violations: Vec<DominanceViolation>,
    /// Rows where the buffer and idle servers coexist or the state does not
    /// balance. Each entry is `(t, description)`.
    pub conservation_breaches: Vec<(f64, String)>,
}

impl DominanceAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.conservation_breaches.is_empty()
    }
}

/// Smallest `delta >= 0` with `#{mu_k < mu* - delta} <= floor(n^{1/4})`.
pub fn default_delta(profile: &RateProfile) -> f64 {
    let mu_star = profile.mu_star;
    let mut gaps: Vec<f64> = profile
        .rates
        .iter()
        .filter(|&&r| r < mu_star)
        .map(|&r| mu_star - r)
        .collect();
    let allowed = (profile.n() as f64).powf(0.25).floor() as usize;
    if gaps.len() <= allowed {
        return 0.0;
    }
    // Choosing delta equal to the (allowed+1)-th largest gap leaves exactly
    // the `allowed` strictly larger gaps below mu* - delta.
    gaps.sort_unstable_by(|a, b| b.total_cmp(a));
    gaps[allowed]
}

pub fn dominance_audit(
    path: &PathRecord,
    profile: &RateProfile,
    limit: &LimitParams,
    lambda_n: f64,
    opts: &DominanceOptions,
) -> Result<DominanceAudit> {
    let n = path.n();
    if n != profile.n() {
        return argument(format!("path has {n} servers, profile has {}", profile.n()));
    }
    if path.rows.is_empty() {
        return argument("dominance audit needs a recorded path");
    }
    if path.rows.iter().any(|r| !r.idle_rate_integral.is_finite()) {
        return argument("path lacks the idle-rate integral tracker");
    }
    if !(lambda_n > 0.0) {
        return argument(format!("arrival rate must be positive, got {lambda_n}"));
    }
    if let Some(d) = opts.delta_n {
        if !(d >= 0.0) {
            return argument(format!("delta_n must be >= 0, got {d}"));
        }
    }
    let nf = n as f64;
    let sq = nf.sqrt();
    let lambda = limit.lambda;
    let mu_star = limit.mu_star;
    let rate_dev: f64 = profile.rates.iter().map(|m| m - lambda).sum();
    let b = (lambda_n - nf * lambda) / sq - rate_dev / sq;

    let delta_n = opts.delta_n.unwrap_or_else(|| default_delta(profile));
    let zeta_n = profile.count_below(delta_n);

    let m = path.rows.len();
    let mut times = Vec::with_capacity(m);
    let mut x_hat = Vec::with_capacity(m);
    let mut w = Vec::with_capacity(m);
    let mut xi = Vec::with_capacity(m);
    let mut breaches = Vec::new();
    let x0_hat = (path.rows[0].x as f64 - nf) / sq;
    let mut sup_idle: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    let mut sup_xi_neg: f64 = 0.0;
    for (j, r) in path.rows.iter().enumerate() {
        let t = r.t;
        let xh = (r.x as f64 - nf) / sq;
        let wj = xh - x0_hat - b * t - r.idle_rate_integral / sq;
        let xij = if j == 0 {
            x0_hat
        } else {
            let h = t - times[j - 1];
            max_gap = max_gap.max(h);
            let prev: f64 = xi[j - 1];
            prev + (wj - w[j - 1]) + b * h + mu_star * (-prev).max(0.0) * h
        };
        sup_xi_neg = sup_xi_neg.max((-xij).max(0.0));
        sup_idle = sup_idle.max(r.i as f64 / sq);
        if r.q > 0 && r.i > 0 {
            breaches.push((t, format!("Q = {} while I = {}", r.q, r.i)));
        } else if r.x as i64 - n as i64 != r.q as i64 - r.i as i64 {
            breaches.push((t, format!("X = {} but Q - I = {} - {}", r.x, r.q, r.i)));
        }
        times.push(t);
        x_hat.push(xh);
        w.push(wj);
        xi.push(xij);
    }
    let v_n = delta_n * sup_idle + mu_star * zeta_n;
    let tol = opts
        .tol
        .unwrap_or(1e-6 + mu_star * max_gap * sup_xi_neg);
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    for j in 0..m {
        let margin = x_hat[j] - (xi[j] - v_n * times[j]);
        min_margin = min_margin.min(margin);
        if margin < -tol {
            violations.push(DominanceViolation {
                t: times[j],
                gap: margin,
            });
        }
    }
    Ok(DominanceAudit {
        n,
        b,
        delta_n,
        zeta_n,
        v_n,
        sup_idle_scaled: sup_idle,
        max_gap,
        tol,
        min_margin,
        times,
        x_hat,
        w,
        xi,
        violations,
        conservation_breaches: breaches,
    })
}
