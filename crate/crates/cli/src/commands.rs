use std::path::{Path, PathBuf};

use hwroute::analysis::{
    difference, dominance_audit, ks_critical_05, ks_distance, ks_p_value, idle_metric,
    concentration_bounds, concentration_mc, monotone_from, policy_comparison, DominanceOptions, MeanCi,
};
use hwroute::config::ScenarioConfig;
use hwroute::diffusion::{marginal_samples, sde_batch, write_sde_csv, SdeParams, Xi0};
use hwroute::experiment::{limit_params, replication_seeds, run_replication, setup, RunSpec};
use hwroute::replicate::run_indexed;
use hwroute::sampling::sample_count;
use hwroute::scenario::LimitParams;
use hwroute::seed::{stream, Purpose};
use hwroute::sim::{PolicyKind, RecordMode};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::manifest::{RunManifest, MANIFEST_SCHEMA};
use crate::report::{create, ensure_dir, mean_sd, median, quantile, write_json, write_rows};
use crate::{CliResult, Failure};

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Rerun(r) => rerun(&r),
        other => run(other, None),
    }
}

fn run(cmd: Command, preset: Option<ScenarioConfig>) -> CliResult<()> {
    let preset = preset.as_ref();
    match &cmd {
        Command::Validate(a) => validate(a, &cmd, preset),
        Command::Converge(a) => converge(a, &cmd, preset),
        Command::Trends(a) => trends(a, &cmd, preset),
        Command::Compare(a) => compare(a, &cmd, preset),
        Command::Simulate(a) => simulate_one(a, &cmd, preset),
        Command::Sde(a) => sde(a, &cmd, preset),
        Command::Rerun(_) => Err(Failure::Config("a manifest cannot record a rerun".into())),
    }
}

fn common_mut(cmd: &mut Command) -> Option<&mut Common> {
    match cmd {
        Command::Converge(a) => Some(&mut a.common),
        Command::Trends(a) => Some(&mut a.common),
        Command::Compare(a) => Some(&mut a.common),
        Command::Simulate(a) => Some(&mut a.common),
        Command::Sde(a) => Some(&mut a.common),
        Command::Validate(_) | Command::Rerun(_) => None,
    }
}

fn rerun(r: &RerunArgs) -> CliResult<()> {
    let m = RunManifest::load(&r.manifest)?;
    let preset = ScenarioConfig::from_toml_str(&m.resolved_scenario)?;
    let mut args = m.args;
    if let Some(c) = common_mut(&mut args) {
        c.seed = Some(m.seed);
        c.workers = m.workers;
        if let Some(o) = &r.outdir {
            c.outdir = o.clone();
        }
    } else if let Command::Validate(v) = &mut args {
        if let Some(o) = &r.outdir {
            v.outdir = Some(o.clone());
        }
    }
    run(args, Some(preset))
}

fn load_scenario(path: &Path) -> CliResult<ScenarioConfig> {
    if !path.is_file() {
        return Err(Failure::Config(format!(
            "scenario file {} does not exist",
            path.display()
        )));
    }
    Ok(ScenarioConfig::load(path)?)
}

fn check(cfg: &ScenarioConfig) -> CliResult<()> {
    let v = cfg.violations();
    if v.is_empty() {
        return Ok(());
    }
    Err(Failure::Config(format!(
        "{} scenario violation(s):\n  - {}",
        v.len(),
        v.join("\n  - ")
    )))
}

/// Resolved scenario plus the command's output directory.
struct Ctx {
    cfg: ScenarioConfig,
    workers: Option<usize>,
    dir: PathBuf,
    warnings: Vec<String>,
}

impl Ctx {
    fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }
}

fn prepare(
    cmd: &Command,
    common: &Common,
    preset: Option<&ScenarioConfig>,
    t_probe: Option<f64>,
    thin_grid: Option<f64>,
) -> CliResult<Ctx> {
    let mut cfg = match preset {
        Some(c) => c.clone(),
        None => load_scenario(&common.scenario)?,
    };
    if let Some(l) = &common.ladder {
        cfg.ladder = l.clone();
    }
    if let Some(r) = common.reps {
        cfg.reps = r;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = t_probe {
        cfg.t_probe = Some(t);
    }
    if let Some(g) = thin_grid {
        cfg.thin_grid = Some(g);
    }
    check(&cfg)?;
    if common.workers == Some(0) {
        return Err(Failure::Config("--workers must be >= 1".into()));
    }
    let dir = ensure_dir(&common.outdir.join(cmd.name()))?;
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        command: cmd.name().into(),
        scenario: common.scenario.clone(),
        ladder: cfg.ladder.clone(),
        reps: cfg.reps,
        seed: cfg.seed,
        outdir: common.outdir.clone(),
        workers: common.workers,
        resolved_scenario: cfg.to_toml_string(),
        args: cmd.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(Ctx {
        cfg,
        workers: common.workers,
        dir,
        warnings: Vec::new(),
    })
}

fn finish(assert: bool, failed: Vec<String>) -> CliResult<()> {
    if assert && !failed.is_empty() {
        return Err(Failure::Assert(failed));
    }
    for f in &failed {
        eprintln!("check not met: {f}");
    }
    Ok(())
}

fn limit_json(l: &LimitParams) -> serde_json::Value {
    json!({
        "lambda": l.lambda,
        "lambda_hat": l.lambda_hat,
        "mu_hat": l.mu_hat,
        "sigma2": l.sigma2,
        "beta": l.beta_drift,
        "mu_star": l.mu_star,
    })
}

fn default_n(cfg: &ScenarioConfig, n: Option<usize>) -> CliResult<usize> {
    match n {
        Some(0) => Err(Failure::Config("--n must be positive".into())),
        Some(n) => Ok(n),
        None => Ok(*cfg.ladder.iter().max().expect("validated ladder is nonempty")),
    }
}

fn grid_path(
    cfg: &ScenarioConfig,
    s: &hwroute::experiment::Setup,
    policy: PolicyKind,
    horizon: f64,
    path: &Path,
) -> CliResult<()> {
    let Some(step) = cfg.thin_grid else {
        return Ok(());
    };
    let spec = RunSpec::new(policy, 0, horizon).with_mode(RecordMode::Grid { step });
    let (rec, _) = run_replication(cfg, s, &spec)?;
    rec.write_csv(create(path)?)?;
    Ok(())
}

// ---------------------------------------------------------------- validate

fn validate(a: &ValidateArgs, cmd: &Command, preset: Option<&ScenarioConfig>) -> CliResult<()> {
    let cfg = match preset {
        Some(c) => c.clone(),
        None => load_scenario(&a.scenario)?,
    };
    check(&cfg)?;
    let limit = limit_params(&cfg)?;
    println!("scenario: {}", cfg.name.as_deref().unwrap_or(&a.scenario.to_string_lossy()));
    println!("lambda = mu = {}", limit.lambda);
    println!("lambda_hat = {}", limit.lambda_hat);
    println!("mu_hat = {} (at n_ref = {})", limit.mu_hat, cfg.n_ref());
    println!("sigma^2 = {}", limit.sigma2);
    println!("beta = {}", limit.beta_drift);
    println!("mu* = {}", limit.mu_star);
    let mut sizes = Vec::new();
    for &n in &cfg.ladder {
        let s = setup(&cfg, n)?;
        let nr = s.n_realized();
        let r = sample_count(nr, cfg.beta_r);
        println!("n = {n}: realized {nr} servers, r = {r} sampled, lambda_n = {}", s.lambda_n);
        sizes.push(json!({ "n": n, "n_realized": nr, "r": r, "lambda_n": s.lambda_n }));
    }
    if let Some(out) = &a.outdir {
        let dir = ensure_dir(&out.join("validate"))?;
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: cmd.name().into(),
            scenario: a.scenario.clone(),
            ladder: cfg.ladder.clone(),
            reps: cfg.reps,
            seed: cfg.seed,
            outdir: out.clone(),
            workers: None,
            resolved_scenario: cfg.to_toml_string(),
            args: cmd.clone(),
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
        write_json(
            &dir.join("limit.json"),
            &json!({
                "schema": "hwroute.validate/1",
                "limit": limit_json(&limit),
                "n_ref": cfg.n_ref(),
                "sizes": sizes,
            }),
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------- converge

#[derive(Serialize)]
struct SampleRow {
    rep: usize,
    x_hat: f64,
}

#[derive(Serialize)]
struct ConvergeRow {
    n: usize,
    n_realized: usize,
    reps: usize,
    t_probe: f64,
    ks: f64,
    ks_critical_05: f64,
    ks_p_value: f64,
    mean_x_hat: f64,
    sd_x_hat: f64,
    mean_sde: f64,
    sd_sde: f64,
}

/// Standard deviation of the Kolmogorov law, in units of the two-sample scale.
const KOLMOGOROV_SD: f64 = 0.2603;

/// At most one increase along the ladder, and that one within two
/// Monte-Carlo standard deviations.
fn ks_trend(rows: &[ConvergeRow], sde_samples: usize) -> (bool, f64, Vec<usize>) {
    let tol = rows
        .iter()
        .map(|r| {
            let (m, k) = (r.reps as f64, sde_samples as f64);
            2.0 * KOLMOGOROV_SD * (1.0 / m + 1.0 / k).sqrt()
        })
        .fold(0.0, f64::max);
    let inversions: Vec<usize> = rows
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].ks > w[0].ks)
        .map(|(j, _)| j + 1)
        .collect();
    let ok = inversions.len() <= 1
        && inversions
            .iter()
            .all(|&j| rows[j].ks - rows[j - 1].ks <= tol);
    (ok, tol, inversions)
}

fn converge(a: &ConvergeArgs, cmd: &Command, preset: Option<&ScenarioConfig>) -> CliResult<()> {
    let mut ctx = prepare(cmd, &a.common, preset, a.t_probe, a.thin_grid)?;
    let cfg = ctx.cfg.clone();
    let t = cfg.t_probe();
    if cfg.reps == 1 {
        ctx.warn("reps = 1: a KS distance from a single sample is meaningless");
    }
    let limit = limit_params(&cfg)?;
    let params = SdeParams::from_limit(&limit, Xi0::Point { value: cfg.xi0 });
    let dt = if t > 0.0 { cfg.sde.dt.min(t) } else { cfg.sde.dt };
    let sde = sde_batch(&params, dt, t, cfg.sde.samples, cfg.seed, ctx.workers)?;
    write_sde_csv(create(&ctx.dir.join("sde_samples.csv"))?, &sde, &params, dt, t, cfg.seed)?;
    let (mean_sde, sd_sde) = mean_sd(&sde);

    let mut rows = Vec::new();
    for &n in &cfg.ladder {
        let s = setup(&cfg, n)?;
        let xs = marginal_samples(&cfg, &s, PolicyKind::Pi0, t, cfg.reps, ctx.workers)?;
        let dir = ctx.dir.join(n.to_string());
        let samples: Vec<SampleRow> = xs
            .iter()
            .enumerate()
            .map(|(rep, &x_hat)| SampleRow { rep, x_hat })
            .collect();
        write_rows(&dir.join("samples.csv"), &samples)?;
        grid_path(&cfg, &s, PolicyKind::Pi0, cfg.horizon, &dir.join("path_rep0.csv"))?;
        let ks = ks_distance(&xs, &sde)?;
        let (mean_x_hat, sd_x_hat) = mean_sd(&xs);
        println!("n = {n}: KS = {ks:.4}, mean X^ = {mean_x_hat:.4} (limit {mean_sde:.4})");
        rows.push(ConvergeRow {
            n,
            n_realized: s.n_realized(),
            reps: cfg.reps,
            t_probe: t,
            ks,
            ks_critical_05: ks_critical_05(xs.len(), sde.len()),
            ks_p_value: ks_p_value(ks, xs.len(), sde.len()),
            mean_x_hat,
            sd_x_hat,
            mean_sde,
            sd_sde,
        });
    }
    write_rows(&ctx.dir.join("report.csv"), &rows)?;
    let (trend_ok, tol, inversions) = ks_trend(&rows, sde.len());
    write_json(
        &ctx.dir.join("summary.json"),
        &json!({
            "schema": "hwroute.converge/1",
            "policy": PolicyKind::Pi0.name(),
            "t_probe": t,
            "reps": cfg.reps,
            "seed": cfg.seed,
            "limit": limit_json(&limit),
            "sde": { "xi0": cfg.xi0, "dt": dt, "samples": sde.len() },
            "rows": rows,
            "trend": { "ok": trend_ok, "inversions": inversions, "tolerance": tol },
            "warnings": ctx.warnings,
        }),
    )?;
    let mut failed = Vec::new();
    if !trend_ok {
        failed.push(format!(
            "KS not nonincreasing across the ladder (inversions at {inversions:?}, tolerance {tol:.4})"
        ));
    }
    finish(a.common.assert, failed)
}

// ---------------------------------------------------------------- trends

#[derive(Serialize)]
struct MetricRow {
    rep: usize,
    metric: f64,
}

#[derive(Serialize)]
struct IdleRow {
    n: usize,
    n_realized: usize,
    reps: usize,
    t_bar: f64,
    epsilon: f64,
    alpha_class: f64,
    median: f64,
    mean: f64,
    q90: f64,
}

#[derive(Serialize)]
struct ConcentrationRow {
    n: f64,
    log_bound1: f64,
    log_bound2: f64,
    bound1: f64,
    bound2: f64,
    nu: f64,
    eta: f64,
    vacuous1: bool,
    vacuous2: bool,
    reps: Option<usize>,
    l1: Option<usize>,
    l2: Option<usize>,
    theta: Option<f64>,
    p1_hat: Option<f64>,
    se1: Option<f64>,
    p2_hat: Option<f64>,
    se2: Option<f64>,
    regime_reached: Option<bool>,
}

fn trends(a: &TrendsArgs, cmd: &Command, preset: Option<&ScenarioConfig>) -> CliResult<()> {
    let ctx = prepare(cmd, &a.common, preset, None, None)?;
    let cfg = &ctx.cfg;
    let Some(conc_cfg) = cfg.concentration else {
        return Err(Failure::Config(
            "trends needs a [concentration] table in the scenario".into(),
        ));
    };
    if a.bound_sizes.iter().any(|&n| !(n >= 1.0)) {
        return Err(Failure::Config("--bound-sizes entries must be >= 1".into()));
    }
    let part = cfg.partition();
    let t_bar = cfg.t_bar();
    let horizon = cfg.horizon.max(t_bar);

    let mut idle_rows = Vec::new();
    for &n in &cfg.ladder {
        let s = setup(cfg, n)?;
        let metric = run_indexed(cfg.reps, ctx.workers, |rep| {
            let spec = RunSpec::new(PolicyKind::Pi0, rep, horizon).full().with_classes();
            let (path, _) = run_replication(cfg, &s, &spec)?;
            idle_metric(&path, &part, t_bar)
        })?;
        let rows: Vec<MetricRow> = metric
            .iter()
            .enumerate()
            .map(|(rep, &metric)| MetricRow { rep, metric })
            .collect();
        write_rows(&ctx.dir.join(n.to_string()).join("idle_metric.csv"), &rows)?;
        let row = IdleRow {
            n,
            n_realized: s.n_realized(),
            reps: cfg.reps,
            t_bar,
            epsilon: part.epsilon,
            alpha_class: part.alpha,
            median: median(&metric),
            mean: mean_sd(&metric).0,
            q90: quantile(&metric, 0.9),
        };
        println!("n = {n}: median idle metric {:.4}", row.median);
        idle_rows.push(row);
    }
    write_rows(&ctx.dir.join("idle_trend.csv"), &idle_rows)?;

    let mut conc = Vec::new();
    for &size in &a.bound_sizes {
        let b = concentration_bounds(&conc_cfg, size)?;
        let mut row = ConcentrationRow {
            n: size,
            log_bound1: b.log_bound1,
            log_bound2: b.log_bound2,
            bound1: b.bound1,
            bound2: b.bound2,
            nu: b.nu,
            eta: b.eta,
            vacuous1: b.vacuous1,
            vacuous2: b.vacuous2,
            reps: None,
            l1: None,
            l2: None,
            theta: None,
            p1_hat: None,
            se1: None,
            p2_hat: None,
            se2: None,
            regime_reached: None,
        };
        if size <= a.mc_max {
            let n = size.round() as usize;
            let mut rng = stream(cfg.seed, n as u64, 0, Purpose::Concentration);
            let e = concentration_mc(&conc_cfg, n, cfg.reps, &mut rng)?;
            row.reps = Some(e.reps);
            row.l1 = Some(e.l1);
            row.l2 = Some(e.l2);
            row.theta = Some(e.theta);
            row.p1_hat = Some(e.p1_hat);
            row.se1 = Some(e.se1);
            row.p2_hat = Some(e.p2_hat);
            row.se2 = Some(e.se2);
            row.regime_reached = Some(e.regime_reached);
        }
        println!(
            "n = {size:e}: bound1 = {:.4e} (log {:.3}), bound2 = {:.4e} (log {:.3})",
            row.bound1, row.log_bound1, row.bound2, row.log_bound2
        );
        conc.push(row);
    }
    write_rows(&ctx.dir.join("concentration.csv"), &conc)?;

    let log_ns: Vec<f64> = a.bound_sizes.iter().map(|n| n.ln()).collect();
    let from = monotone_from(&conc_cfg, &log_ns)?;
    let mut failed = Vec::new();
    if idle_rows.windows(2).any(|w| w[1].median > w[0].median) {
        failed.push("median idle metric increases along the ladder".to_string());
    }
    if conc
        .windows(2)
        .any(|w| w[1].log_bound1 > w[0].log_bound1 || w[1].log_bound2 > w[0].log_bound2)
    {
        failed.push("concentration bounds increase along the size list".to_string());
    }
    for r in &conc {
        if let (Some(p1), Some(se1), Some(p2), Some(se2)) = (r.p1_hat, r.se1, r.p2_hat, r.se2) {
            if r.bound1 < p1 - 3.0 * se1 || r.bound2 < p2 - 3.0 * se2 {
                failed.push(format!("bound below the simulated frequency at n = {}", r.n));
            }
        }
    }
    write_json(
        &ctx.dir.join("summary.json"),
        &json!({
            "schema": "hwroute.trends/1",
            "policy": PolicyKind::Pi0.name(),
            "seed": cfg.seed,
            "reps": cfg.reps,
            "partition": { "epsilon": part.epsilon, "alpha_class": part.alpha },
            "t_bar": t_bar,
            "concentration": conc_cfg,
            "idle_metric": idle_rows,
            "concentration": conc,
            "monotone_from_n": from.map(|i| a.bound_sizes[i]),
            "checks_failed": failed,
        }),
    )?;
    finish(a.common.assert, failed)
}

// ---------------------------------------------------------------- compare

#[derive(Serialize)]
struct PerRepRow {
    policy: PolicyKind,
    rep: usize,
    x_hat: f64,
    int_q_hat: f64,
}

#[derive(Serialize)]
struct TableRow {
    policy: PolicyKind,
    reps: usize,
    mean_x_hat: f64,
    se_x_hat: f64,
    ci_lo_x_hat: f64,
    ci_hi_x_hat: f64,
    mean_int_q_hat: f64,
    se_int_q_hat: f64,
    ci_lo_int_q_hat: f64,
    ci_hi_int_q_hat: f64,
}

#[derive(Serialize)]
struct DominanceRow {
    policy: PolicyKind,
    rep: usize,
    events: usize,
    violations: usize,
    conservation_breaches: usize,
    delta_n: f64,
    zeta_n: f64,
    v_n: f64,
    tol: f64,
    min_margin: f64,
    passed: bool,
}

fn compare(a: &CompareArgs, cmd: &Command, preset: Option<&ScenarioConfig>) -> CliResult<()> {
    let ctx = prepare(cmd, &a.common, preset, a.t_probe, a.thin_grid)?;
    let cfg = &ctx.cfg;
    let n = default_n(cfg, a.n)?;
    let policies = a.policies.clone().unwrap_or_else(|| cfg.policies.clone());
    if policies.is_empty() {
        return Err(Failure::Config("--policies must list at least one policy".into()));
    }
    let t = cfg.t_probe();
    let s = setup(cfg, n)?;
    let dir = ctx.dir.join(n.to_string());

    let table = policy_comparison(cfg, &s, &policies, t, cfg.reps, ctx.workers)?;
    let mut per_rep = Vec::new();
    let mut rows = Vec::new();
    for p in &table {
        for (rep, &(x_hat, int_q_hat)) in p.samples.iter().enumerate() {
            per_rep.push(PerRepRow {
                policy: p.policy,
                rep,
                x_hat,
                int_q_hat,
            });
        }
        rows.push(TableRow {
            policy: p.policy,
            reps: p.reps,
            mean_x_hat: p.x_hat.mean,
            se_x_hat: p.x_hat.se,
            ci_lo_x_hat: p.x_hat.lo(),
            ci_hi_x_hat: p.x_hat.hi(),
            mean_int_q_hat: p.q_hat_integral.mean,
            se_int_q_hat: p.q_hat_integral.se,
            ci_lo_int_q_hat: p.q_hat_integral.lo(),
            ci_hi_int_q_hat: p.q_hat_integral.hi(),
        });
        println!(
            "{}: mean X^ = {:.4} [{:.4}, {:.4}], mean int Q^ = {:.4}",
            p.policy,
            p.x_hat.mean,
            p.x_hat.lo(),
            p.x_hat.hi(),
            p.q_hat_integral.mean
        );
    }
    write_rows(&dir.join("per_rep.csv"), &per_rep)?;
    write_rows(&dir.join("table.csv"), &rows)?;

    let audits = a.dominance_reps.min(cfg.reps);
    let mut dom = Vec::new();
    for &policy in &policies {
        let mut part = run_indexed(audits, ctx.workers, |rep| {
            let (path, _) =
                run_replication(cfg, &s, &RunSpec::new(policy, rep, cfg.horizon).full())?;
            let d = dominance_audit(&path, &s.profile, &s.limit, s.lambda_n, &DominanceOptions::default())?;
            Ok(DominanceRow {
                policy,
                rep,
                events: path.rows.len(),
                violations: d.violations.len(),
                conservation_breaches: d.conservation_breaches.len(),
                delta_n: d.delta_n,
                zeta_n: d.zeta_n,
                v_n: d.v_n,
                tol: d.tol,
                min_margin: d.min_margin,
                passed: d.passed(),
            })
        })?;
        dom.append(&mut part);
        grid_path(cfg, &s, policy, cfg.horizon, &dir.join(format!("path_{policy}_rep0.csv")))?;
    }
    write_rows(&dir.join("dominance.csv"), &dom)?;

    let find = |k: PolicyKind| table.iter().find(|p| p.policy == k).map(|p| p.x_hat);
    let mut failed = Vec::new();
    let mut contrasts = Vec::new();
    let homogeneous = cfg.rates.spread() == 0.0;
    if homogeneous {
        for x in &table {
            for y in &table {
                if x.policy.code() < y.policy.code() && !x.x_hat.overlaps(&y.x_hat) {
                    failed.push(format!("{} and {} differ on a homogeneous pool", x.policy, y.policy));
                }
            }
        }
    } else if let (Some(sf), Some(pi0)) = (find(PolicyKind::SlowestFirst), find(PolicyKind::Pi0)) {
        let d = difference(&sf, &pi0);
        contrasts.push(contrast("SlowestFirst - PI0", &d));
        if !(d.lo() > 0.0) {
            failed.push(format!("SlowestFirst - PI0 = {:.4} is not positive at 95%", d.mean));
        }
    }
    if let (Some(pi0), Some(fsf)) = (find(PolicyKind::Pi0), find(PolicyKind::Fsf)) {
        let d = difference(&pi0, &fsf);
        contrasts.push(contrast("PI0 - FSF", &d));
        if d.mean.abs() > 2.0 * d.se {
            failed.push(format!(
                "|PI0 - FSF| = {:.4} exceeds 2 pooled s.e. = {:.4}",
                d.mean.abs(),
                2.0 * d.se
            ));
        }
    }
    let bad_paths = dom.iter().filter(|d| !d.passed).count();
    if bad_paths > 0 {
        failed.push(format!("{bad_paths} audited paths break the lower bound"));
    }
    write_json(
        &dir.join("summary.json"),
        &json!({
            "schema": "hwroute.compare/1",
            "n": n,
            "n_realized": s.n_realized(),
            "t_probe": t,
            "reps": cfg.reps,
            "seed": cfg.seed,
            "limit": limit_json(&s.limit),
            "table": rows,
            "contrasts": contrasts,
            "dominance": {
                "paths": dom.len(),
                "failed_paths": bad_paths,
                "max_v_n": dom.iter().map(|d| d.v_n).fold(0.0, f64::max),
                "min_margin": dom.iter().map(|d| d.min_margin).fold(f64::INFINITY, f64::min),
            },
            "checks_failed": failed,
        }),
    )?;
    finish(a.common.assert, failed)
}

fn contrast(name: &str, d: &MeanCi) -> serde_json::Value {
    json!({ "contrast": name, "mean": d.mean, "se": d.se, "ci_lo": d.lo(), "ci_hi": d.hi() })
}

// ---------------------------------------------------------------- simulate

fn simulate_one(a: &SimulateArgs, cmd: &Command, preset: Option<&ScenarioConfig>) -> CliResult<()> {
    let ctx = prepare(cmd, &a.common, preset, None, a.thin_grid)?;
    let cfg = &ctx.cfg;
    let n = default_n(cfg, a.n)?;
    let s = setup(cfg, n)?;
    let mode = match cfg.thin_grid {
        Some(step) => RecordMode::Grid { step },
        None => RecordMode::Full,
    };
    let mut spec = RunSpec::new(a.policy, a.rep, cfg.horizon).with_mode(mode).with_classes();
    if a.job_log {
        spec = spec.with_job_log();
    }
    let (path, plan) = run_replication(cfg, &s, &spec)?;
    let dir = ctx.dir.join(n.to_string());
    if a.binary {
        path.write_binary(create(&dir.join("path.bin"))?)?;
    } else {
        path.write_csv(create(&dir.join("path.csv"))?)?;
    }
    if let Some(plan) = &plan {
        plan.write_csv(create(&dir.join("plan.csv"))?)?;
    }
    if let Some(jobs) = &path.jobs {
        write_rows(&dir.join("jobs.csv"), jobs)?;
    }
    let seeds = replication_seeds(cfg.seed, a.policy, n, a.rep);
    let sm = &path.summary;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "schema": "hwroute.simulate/1",
            "n": n,
            "n_realized": s.n_realized(),
            "policy": a.policy,
            "rep": a.rep,
            "seeds": seeds,
            "meta": path.meta,
            "rows": path.rows.len(),
            "end_time": sm.end_time,
            "x": sm.x,
            "arrivals": sm.arrivals,
            "departures": sm.departures,
            "arrivals_waited": sm.arrivals_waited,
            "queue_integral": sm.queue_integral,
            "idle_rate_integral": sm.idle_rate_integral,
        }),
    )?;
    println!(
        "n = {n}, {}: {} rows, X(T) = {}, {} arrivals",
        a.policy,
        path.rows.len(),
        sm.x,
        sm.arrivals
    );
    Ok(())
}

// ---------------------------------------------------------------- sde

fn sde(a: &SdeArgs, cmd: &Command, preset: Option<&ScenarioConfig>) -> CliResult<()> {
    let ctx = prepare(cmd, &a.common, preset, a.t_probe, None)?;
    let cfg = &ctx.cfg;
    let t = cfg.t_probe();
    let samples = a.samples.unwrap_or(cfg.sde.samples);
    let dt = a.dt.unwrap_or(cfg.sde.dt);
    if samples == 0 {
        return Err(Failure::Config("--samples must be >= 1".into()));
    }
    let limit = limit_params(cfg)?;
    let params = SdeParams::from_limit(&limit, Xi0::Point { value: cfg.xi0 });
    let xs = sde_batch(&params, dt, t, samples, cfg.seed, ctx.workers)?;
    write_sde_csv(create(&ctx.dir.join("samples.csv"))?, &xs, &params, dt, t, cfg.seed)?;
    let (mean, sd) = mean_sd(&xs);
    write_json(
        &ctx.dir.join("summary.json"),
        &json!({
            "schema": "hwroute.sde/1",
            "limit": limit_json(&limit),
            "xi0": cfg.xi0,
            "t": t,
            "dt": dt,
            "samples": samples,
            "seed": cfg.seed,
            "mean": mean,
            "sd": sd,
            "q05": quantile(&xs, 0.05),
            "q50": quantile(&xs, 0.5),
            "q95": quantile(&xs, 0.95),
        }),
    )?;
    println!("xi({t}) over {samples} samples: mean {mean:.4}, sd {sd:.4}");
    Ok(())
}
