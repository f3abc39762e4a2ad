//! Python bindings: scenarios, single replications, marginal batches, the
//! limit diffusion and the analysis helpers.
//!
//! Configuration problems raise `hwroute.ConfigError` (a `ValueError`);
//! everything else raises `RuntimeError`. Long computations release the GIL.

use hwroute::analysis::{self, DominanceOptions, ConcentrationConfig};
use hwroute::config::ScenarioConfig;
use hwroute::diffusion::{self, SdeParams, Xi0};
use hwroute::experiment::{self, RunSpec};
use hwroute::scenario::LimitParams;
use hwroute::sim::{PolicyKind, RecordMode};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(hwroute, ConfigError, PyValueError);

fn to_py(e: hwroute::Error) -> PyErr {
    match e {
        hwroute::Error::Config(_) | hwroute::Error::Parse { .. } | hwroute::Error::Argument(_) => {
            ConfigError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn policy(name: &str) -> PyResult<PolicyKind> {
    name.parse().map_err(to_py)
}

fn limit_dict<'py>(py: Python<'py>, l: &LimitParams) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("lambda", l.lambda)?;
    d.set_item("lambda_hat", l.lambda_hat)?;
    d.set_item("mu_hat", l.mu_hat)?;
    d.set_item("sigma2", l.sigma2)?;
    d.set_item("beta", l.beta_drift)?;
    d.set_item("mu_star", l.mu_star)?;
    Ok(d)
}

/// A parsed scenario file.
#[pyclass(module = "hwroute", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Scenario {
    cfg: ScenarioConfig,
}

impl Scenario {
    fn resolve(&self, n: usize) -> PyResult<experiment::Setup> {
        experiment::setup(&self.cfg, n).map_err(to_py)
    }
}

#[pymethods]
impl Scenario {
    /// Parse TOML text. Invariants are not checked; see `violations`.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = ScenarioConfig::from_toml_str(text).map_err(to_py)?;
        Ok(Self { cfg })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let cfg = ScenarioConfig::load(path).map_err(to_py)?;
        Ok(Self { cfg })
    }

    fn to_toml(&self) -> String {
        self.cfg.to_toml_string()
    }

    /// A copy with a different master seed.
    fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.cfg.clone();
        cfg.seed = seed;
        Self { cfg }
    }

    fn violations(&self) -> Vec<String> {
        self.cfg.violations()
    }

    fn validate(&self) -> PyResult<()> {
        self.cfg.validate().map_err(to_py)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    #[getter]
    fn ladder(&self) -> Vec<usize> {
        self.cfg.ladder.clone()
    }

    #[getter]
    fn reps(&self) -> usize {
        self.cfg.reps
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.cfg.horizon
    }

    #[getter]
    fn t_probe(&self) -> f64 {
        self.cfg.t_probe()
    }

    fn limit_params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let l = experiment::limit_params(&self.cfg).map_err(to_py)?;
        limit_dict(py, &l)
    }

    /// Realized size, service rates, arrival rate and initial occupancy at
    /// nominal size `n`.
    fn setup<'py>(&self, py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyDict>> {
        let s = self.resolve(n)?;
        let d = PyDict::new(py);
        d.set_item("n", s.n)?;
        d.set_item("n_realized", s.n_realized())?;
        d.set_item("rates", s.profile.rates.clone())?;
        d.set_item("lambda_n", s.lambda_n)?;
        d.set_item("x0", s.x0)?;
        d.set_item("classes", s.labels.labels.clone())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, seed={}, ladder={:?})",
            self.cfg.name.as_deref().unwrap_or(""),
            self.cfg.seed,
            self.cfg.ladder
        )
    }
}

/// One replication. With `grid` the state is recorded on `0, grid, ...`;
/// otherwise every event is kept.
#[pyfunction]
#[pyo3(signature = (scenario, n, policy_name = "PI0", rep = 0, horizon = None, grid = None))]
fn simulate<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    n: usize,
    policy_name: &str,
    rep: usize,
    horizon: Option<f64>,
    grid: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = policy(policy_name)?;
    let s = scenario.resolve(n)?;
    let mode = grid.map_or(RecordMode::Full, |step| RecordMode::Grid { step });
    let spec = RunSpec::new(p, rep, horizon.unwrap_or(scenario.cfg.horizon)).with_mode(mode);
    let cfg = &scenario.cfg;
    let (path, plan) = py
        .detach(|| experiment::run_replication(cfg, &s, &spec))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", path.n())?;
    d.set_item("policy", p.name())?;
    d.set_item("t", path.rows.iter().map(|r| r.t).collect::<Vec<_>>())?;
    d.set_item("x", path.rows.iter().map(|r| r.x).collect::<Vec<_>>())?;
    d.set_item("q", path.rows.iter().map(|r| r.q).collect::<Vec<_>>())?;
    d.set_item("i", path.rows.iter().map(|r| r.i).collect::<Vec<_>>())?;
    d.set_item("arrivals", path.summary.arrivals)?;
    d.set_item("departures", path.summary.departures)?;
    d.set_item("queue_integral", path.summary.queue_integral)?;
    d.set_item("init_fallback", path.meta.init_fallback)?;
    d.set_item("rank", plan.map(|pl| pl.rank))?;
    Ok(d)
}

/// `reps` independent values of `X^(t_probe)` at nominal size `n`.
#[pyfunction]
#[pyo3(signature = (scenario, n, policy_name = "PI0", t_probe = None, reps = None, workers = None))]
fn marginal_samples(
    py: Python<'_>,
    scenario: &Scenario,
    n: usize,
    policy_name: &str,
    t_probe: Option<f64>,
    reps: Option<usize>,
    workers: Option<usize>,
) -> PyResult<Vec<f64>> {
    let p = policy(policy_name)?;
    let s = scenario.resolve(n)?;
    let cfg = &scenario.cfg;
    let t = t_probe.unwrap_or(cfg.t_probe());
    let reps = reps.unwrap_or(cfg.reps);
    py.detach(|| diffusion::marginal_samples(cfg, &s, p, t, reps, workers))
        .map_err(to_py)
}

/// Terminal values of the limit diffusion started at the scenario's `xi0`.
#[pyfunction]
#[pyo3(signature = (scenario, t = None, samples = None, dt = None, workers = None))]
fn sde_batch(
    py: Python<'_>,
    scenario: &Scenario,
    t: Option<f64>,
    samples: Option<usize>,
    dt: Option<f64>,
    workers: Option<usize>,
) -> PyResult<Vec<f64>> {
    let cfg = &scenario.cfg;
    let limit = experiment::limit_params(cfg).map_err(to_py)?;
    let params = SdeParams::from_limit(&limit, Xi0::Point { value: cfg.xi0 });
    let t = t.unwrap_or(cfg.t_probe());
    let samples = samples.unwrap_or(cfg.sde.samples);
    let dt = dt.unwrap_or(cfg.sde.dt);
    py.detach(|| diffusion::sde_batch(&params, dt, t, samples, cfg.seed, workers))
        .map_err(to_py)
}

#[pyfunction]
fn ks_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    analysis::ks_distance(&a, &b).map_err(to_py)
}

#[pyfunction]
fn ks_critical_05(m: usize, n: usize) -> f64 {
    analysis::ks_critical_05(m, n)
}

/// Chernoff bounds on the two concentration events at size `n`.
#[pyfunction]
#[pyo3(signature = (phi, psi, beta_exp, kappa, gamma, n, c1 = 1.0, c2 = 1.0, nu = None, eta = 1.0))]
#[allow(clippy::too_many_arguments)]
fn concentration_bounds<'py>(
    py: Python<'py>,
    phi: f64,
    psi: f64,
    beta_exp: f64,
    kappa: f64,
    gamma: f64,
    n: f64,
    c1: f64,
    c2: f64,
    nu: Option<f64>,
    eta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ConcentrationConfig {
        phi,
        psi,
        beta_exp,
        c1,
        c2,
        gamma,
        kappa,
        nu,
        eta,
    };
    let b = analysis::concentration_bounds(&cfg, n).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", b.n)?;
    d.set_item("log_bound1", b.log_bound1)?;
    d.set_item("log_bound2", b.log_bound2)?;
    d.set_item("bound1", b.bound1)?;
    d.set_item("bound2", b.bound2)?;
    d.set_item("nu", b.nu)?;
    d.set_item("eta", b.eta)?;
    Ok(d)
}

/// Mean `X^(t_probe)` and mean `int Q^` with 95% intervals, per policy.
#[pyfunction]
#[pyo3(signature = (scenario, n, policies, t_probe = None, reps = None, workers = None))]
fn policy_comparison<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    n: usize,
    policies: Vec<String>,
    t_probe: Option<f64>,
    reps: Option<usize>,
    workers: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let kinds = policies
        .iter()
        .map(|p| policy(p))
        .collect::<PyResult<Vec<_>>>()?;
    let s = scenario.resolve(n)?;
    let cfg = &scenario.cfg;
    let t = t_probe.unwrap_or(cfg.t_probe());
    let reps = reps.unwrap_or(cfg.reps);
    let table = py
        .detach(|| analysis::policy_comparison(cfg, &s, &kinds, t, reps, workers))
        .map_err(to_py)?;
    table
        .iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("policy", row.policy.name())?;
            d.set_item("reps", row.reps)?;
            d.set_item("mean_x_hat", row.x_hat.mean)?;
            d.set_item("se_x_hat", row.x_hat.se)?;
            d.set_item("ci_x_hat", (row.x_hat.lo(), row.x_hat.hi()))?;
            d.set_item("mean_int_q_hat", row.q_hat_integral.mean)?;
            d.set_item("ci_int_q_hat", (row.q_hat_integral.lo(), row.q_hat_integral.hi()))?;
            Ok(d)
        })
        .collect()
}

/// Pathwise lower-bound audit of one fully recorded replication.
#[pyfunction]
#[pyo3(signature = (scenario, n, policy_name = "PI0", rep = 0))]
fn dominance_audit<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    n: usize,
    policy_name: &str,
    rep: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = policy(policy_name)?;
    let s = scenario.resolve(n)?;
    let cfg = &scenario.cfg;
    let audit = py
        .detach(|| {
            let (path, _) =
                experiment::run_replication(cfg, &s, &RunSpec::new(p, rep, cfg.horizon).full())?;
            analysis::dominance_audit(&path, &s.profile, &s.limit, s.lambda_n, &DominanceOptions::default())
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("passed", audit.passed())?;
    d.set_item("violations", audit.violations.len())?;
    d.set_item("conservation_breaches", audit.conservation_breaches.len())?;
    d.set_item("v_n", audit.v_n)?;
    d.set_item("tol", audit.tol)?;
    d.set_item("min_margin", audit.min_margin)?;
    d.set_item("t", audit.times)?;
    d.set_item("x_hat", audit.x_hat)?;
    d.set_item("xi", audit.xi)?;
    Ok(d)
}

/// Structural checks of one fully recorded replication; returns the names
/// of failed checks (empty when the path is sound).
#[pyfunction]
#[pyo3(signature = (scenario, n, policy_name = "PI0", rep = 0))]
fn invariant_audit(
    py: Python<'_>,
    scenario: &Scenario,
    n: usize,
    policy_name: &str,
    rep: usize,
) -> PyResult<Vec<String>> {
    let p = policy(policy_name)?;
    let s = scenario.resolve(n)?;
    let cfg = &scenario.cfg;
    let report = py
        .detach(|| {
            let spec = RunSpec::new(p, rep, cfg.horizon).full().with_classes().with_job_log();
            let (path, _) = experiment::run_replication(cfg, &s, &spec)?;
            analysis::invariant_audit(&path, s.n_realized())
        })
        .map_err(to_py)?;
    Ok(report.failures().map(|c| c.name.to_string()).collect())
}

#[pymodule(name = "hwroute")]
fn hwroute_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("POLICIES", PolicyKind::ALL.iter().map(|p| p.name()).collect::<Vec<_>>())?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_samples, m)?)?;
    m.add_function(wrap_pyfunction!(sde_batch, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance, m)?)?;
    m.add_function(wrap_pyfunction!(ks_critical_05, m)?)?;
    m.add_function(wrap_pyfunction!(concentration_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(policy_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(dominance_audit, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_audit, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_POOL: &str = r#"
seed = 4
lambda_hat = -1.0
ladder = [40]
horizon = 3.0
reps = 20
[rates]
kind = "pools"
pools = [{ a = 0.25, b = 1.0 }, { a = 0.75, b = 2.0 }]
"#;

    fn run_python(code: &std::ffi::CStr) {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "hwroute").unwrap();
            hwroute_module(&m).unwrap();
            let locals = PyDict::new(py);
            locals.set_item("hw", &m).unwrap();
            locals.set_item("TWO_POOL", TWO_POOL).unwrap();
            if let Err(e) = py.run(code, None, Some(&locals)) {
                e.display(py);
                panic!("python snippet failed: {e}");
            }
        });
    }

    #[test]
    fn scenario_round_trip_and_limit() {
        run_python(
            c"
s = hw.Scenario.from_toml(TWO_POOL)
assert s.violations() == []
lp = s.limit_params()
assert abs(lp['lambda'] - 1.75) < 1e-12
assert abs(lp['sigma2'] - 3.5) < 1e-12
assert hw.Scenario.from_toml(s.to_toml()).seed == 4
assert s.with_seed(9).seed == 9
assert s.setup(40)['n_realized'] == 40
",
        );
    }

    #[test]
    fn errors_map_to_python_exceptions() {
        run_python(
            c"
try:
    hw.Scenario.from_toml('seed = ')
    raise AssertionError('parse should fail')
except hw.ConfigError as e:
    assert 'line 1' in str(e)
bad = hw.Scenario.from_toml(TWO_POOL.replace('a = 0.25', 'a = 0.2'))
assert any('sum to 1' in v for v in bad.violations())
try:
    hw.simulate(hw.Scenario.from_toml(TWO_POOL), 40, 'Bogus')
    raise AssertionError('policy should be rejected')
except ValueError:
    pass
",
        );
    }

    #[test]
    fn simulations_and_analysis() {
        run_python(
            c"
s = hw.Scenario.from_toml(TWO_POOL)
p = hw.simulate(s, 40, 'PI0', grid=0.5)
assert len(p['t']) == 7 and p['rank'] is not None
assert all(x == 40 + q - i for x, q, i in zip(p['x'], p['q'], p['i']))
xs = hw.marginal_samples(s, 40, reps=10, workers=2)
assert xs == hw.marginal_samples(s, 40, reps=10, workers=1)
sde = hw.sde_batch(s, samples=200, dt=0.01)
assert len(sde) == 200
assert 0.0 <= hw.ks_distance(xs, sde) <= 1.0
b = hw.concentration_bounds(1.0, 2.0, 0.75, 0.05, 0.18, 1e4)
assert 0.0 < b['bound1'] < 1.0
table = hw.policy_comparison(s, 40, ['PI0', 'FSF'], reps=8)
assert [r['policy'] for r in table] == ['PI0', 'FSF']
a = hw.dominance_audit(s, 40, 'FSF')
assert a['passed'] and a['v_n'] == 0.0
assert hw.invariant_audit(s, 40, 'RandomIdle', 1) == []
assert 'PI0' in hw.POLICIES
",
        );
    }
}
