//! Event-driven simulation of the n-server queue.
//!
//! One FIFO buffer feeds `n` exponential servers. Arrivals that find idle
//! servers are routed at once to the policy's choice; otherwise they join
//! the buffer. A server finishing service takes the head-of-line job if
//! there is one. Service is never interrupted or migrated.
//!
//! Each routing draws a fresh `Exp(mu_k)` duration, which is equal in law to
//! driving departures by per-server unit Poisson clocks run at `mu_k` times
//! busy time.

mod arrivals;
mod policy;
mod record;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Exp1};

pub use arrivals::RenewalStream;
pub use policy::{choose_server, priorities, PolicyKind, RoutingContext};
pub use record::{
    ClassLabels, JobRecord, PathMeta, PathRecord, PathRow, RunSummary, BINARY_ROW_BYTES,
};

use self::policy::IdleSet;
use crate::error::{argument, config, Result};
use crate::sampling::SamplePlan;
use crate::scenario::{ArrivalLaw, RateProfile};

/// Arrival input of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arrivals {
    Renewal { law: ArrivalLaw, lambda_n: f64 },
    /// No arrivals; the system only drains. Used for test scenarios.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecordMode {
    /// Every event (audit mode).
    Full,
    /// State at `0, step, 2 step, ...` up to the horizon.
    Grid { step: f64 },
    /// Only the initial row and the run summary.
    SummaryOnly,
}

#[derive(Debug, Clone)]
pub struct RecordOptions {
    pub mode: RecordMode,
    pub classes: Option<ClassLabels>,
    pub job_log: bool,
    /// Stored in the metadata only; randomness comes from the rng argument.
    pub seed: u64,
}

impl Default for RecordOptions {
    fn default() -> Self {
        Self {
            mode: RecordMode::Full,
            classes: None,
            job_log: false,
            seed: 0,
        }
    }
}

impl RecordOptions {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn summary_only() -> Self {
        Self {
            mode: RecordMode::SummaryOnly,
            ..Self::default()
        }
    }

    pub fn with_classes(mut self, classes: ClassLabels) -> Self {
        self.classes = Some(classes);
        self
    }

    pub fn with_job_log(mut self) -> Self {
        self.job_log = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimInput<'a> {
    pub profile: &'a RateProfile,
    pub arrivals: Arrivals,
    pub policy: PolicyKind,
    pub plan: Option<&'a SamplePlan>,
    pub x0: usize,
    pub horizon: f64,
}

/// Default initial occupancy `n + round(sqrt(n) xi0)`, floored at 0.
pub fn initial_occupancy(n: usize, xi0: f64) -> usize {
    let x = n as f64 + ((n as f64).sqrt() * xi0).round();
    x.max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Departure = 0,
    Arrival = 1,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: Kind,
    server: u32,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so that BinaryHeap pops the earliest event; ties go to
    // departures, then to the lower server index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.kind.cmp(&self.kind))
            .then(other.server.cmp(&self.server))
    }
}

struct Engine<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    rates: &'a [f64],
    n: usize,
    t: f64,
    x: u64,
    queue: VecDeque<u64>,
    busy: Vec<bool>,
    serving: Vec<u64>,
    busy_since: Vec<f64>,
    busy_time: Vec<f64>,
    routed_k: Vec<u64>,
    departed_k: Vec<u64>,
    idle: IdleSet,
    idle_count: u64,
    idle_class: [u32; 3],
    labels: Option<&'a [u8]>,
    idle_rate_sum: f64,
    idle_rate_integral: f64,
    queue_integral: f64,
    x_integral: f64,
    arrivals: u64,
    departures: u64,
    routings: u64,
    waited: u64,
    heap: BinaryHeap<Event>,
    jobs: Option<Vec<JobRecord>>,
}

impl<R: Rng + ?Sized> Engine<'_, R> {
    fn advance(&mut self, to: f64) {
        let dt = to - self.t;
        if dt > 0.0 {
            self.idle_rate_integral += self.idle_rate_sum * dt;
            self.queue_integral += self.queue.len() as f64 * dt;
            self.x_integral += self.x as f64 * dt;
            self.t = to;
        }
    }

    fn row(&self) -> PathRow {
        PathRow {
            t: self.t,
            x: self.x as u32,
            q: self.queue.len() as u32,
            i: self.idle_count as u32,
            i_class: self.idle_class,
            a: self.arrivals,
            d: self.departures,
            r: self.routings,
            idle_rate_integral: self.idle_rate_integral,
        }
    }

    fn mark_idle(&mut self, k: usize) {
        self.busy[k] = false;
        self.busy_time[k] += self.t - self.busy_since[k];
        self.idle.insert(k);
        self.idle_count += 1;
        self.idle_rate_sum += self.rates[k];
        if let Some(labels) = self.labels {
            self.idle_class[labels[k] as usize] += 1;
        }
    }

    /// Start `job` on server `k`, which must be idle (or just freed).
    fn start(&mut self, k: usize, job: u64, from_idle: bool) {
        if from_idle {
            self.idle_count -= 1;
            self.idle_rate_sum -= self.rates[k];
            if let Some(labels) = self.labels {
                self.idle_class[labels[k] as usize] -= 1;
            }
            if self.idle_count == 0 {
                // cancel accumulated rounding
                self.idle_rate_sum = 0.0;
            }
        }
        self.busy[k] = true;
        self.busy_since[k] = self.t;
        self.serving[k] = job;
        self.routed_k[k] += 1;
        self.routings += 1;
        let e: f64 = Exp1.sample(self.rng);
        self.heap.push(Event {
            time: self.t + e / self.rates[k],
            kind: Kind::Departure,
            server: k as u32,
        });
        if let Some(jobs) = self.jobs.as_mut() {
            let rec = &mut jobs[job as usize];
            rec.server = Some(k as u32);
            rec.routed = Some(self.t);
        }
    }

    fn on_departure(&mut self, k: usize) {
        debug_assert!(self.busy[k]);
        self.departed_k[k] += 1;
        self.departures += 1;
        self.x -= 1;
        if let Some(jobs) = self.jobs.as_mut() {
            jobs[self.serving[k] as usize].departed = Some(self.t);
        }
        match self.queue.pop_front() {
            Some(job) => {
                self.busy_time[k] += self.t - self.busy_since[k];
                self.start(k, job, false);
            }
            None => self.mark_idle(k),
        }
    }

    fn check_balance(&self) {
        let busy = self.n as u64 - self.idle_count;
        debug_assert_eq!(self.x, self.queue.len() as u64 + busy);
        debug_assert!(self.queue.is_empty() || self.idle_count == 0);
    }
}

/// Run one replication up to `input.horizon`.
pub fn simulate<R: Rng + ?Sized>(
    input: &SimInput<'_>,
    opts: &RecordOptions,
    rng: &mut R,
) -> Result<PathRecord> {
    let profile = input.profile;
    let n = profile.n();
    if n == 0 {
        return argument("profile has no servers");
    }
    if !(input.horizon > 0.0 && input.horizon.is_finite()) {
        return argument(format!("horizon must be positive, got {}", input.horizon));
    }
    let (law, lambda_n) = match input.arrivals {
        Arrivals::Renewal { law, lambda_n } => {
            law.validate()?;
            if !(lambda_n > 0.0 && lambda_n.is_finite()) {
                return config(format!("arrival rate must be positive, got {lambda_n}"));
            }
            (Some(law), lambda_n)
        }
        Arrivals::Closed => (None, 0.0),
    };
    if let RecordMode::Grid { step } = opts.mode {
        if !(step > 0.0) {
            return argument(format!("grid step must be positive, got {step}"));
        }
    }
    if let Some(c) = &opts.classes {
        if c.labels.len() != n || c.labels.iter().any(|&l| l > 2) {
            return argument("class labels must assign each server to class 0, 1 or 2");
        }
    }
    let prio = priorities(input.policy, profile, input.plan)?;

    // Initial occupancy: the lowest-ranked servers are idle. Policies
    // without a ranking use index order.
    let x0 = input.x0;
    let idle0 = n.saturating_sub(x0);
    let init_fallback = idle0 > 0 && input.policy != PolicyKind::Pi0;
    let mut initially_idle = vec![false; n];
    if idle0 > 0 {
        match (input.policy, input.plan) {
            (PolicyKind::Pi0, Some(plan)) => {
                for (idle, &rank) in initially_idle.iter_mut().zip(&plan.rank) {
                    *idle = (rank as usize) <= idle0;
                }
            }
            _ => initially_idle[..idle0].fill(true),
        }
    }

    let mut eng = Engine {
        rng,
        rates: &profile.rates,
        n,
        t: 0.0,
        x: x0 as u64,
        queue: VecDeque::new(),
        busy: vec![false; n],
        serving: vec![u64::MAX; n],
        busy_since: vec![0.0; n],
        busy_time: vec![0.0; n],
        routed_k: vec![0; n],
        departed_k: vec![0; n],
        idle: IdleSet::new(n, prio),
        idle_count: 0,
        idle_class: [0; 3],
        labels: opts.classes.as_ref().map(|c| c.labels.as_slice()),
        idle_rate_sum: 0.0,
        idle_rate_integral: 0.0,
        queue_integral: 0.0,
        x_integral: 0.0,
        arrivals: 0,
        departures: 0,
        routings: 0,
        waited: 0,
        heap: BinaryHeap::with_capacity(n + 1),
        jobs: opts.job_log.then(Vec::new),
    };

    // Initial jobs take ids 0..x0, in service first, then the buffer.
    let mut next_initial = 0u64;
    for k in 0..n {
        if initially_idle[k] {
            eng.idle.insert(k);
            eng.idle_count += 1;
            eng.idle_rate_sum += profile.rates[k];
            if let Some(labels) = eng.labels {
                eng.idle_class[labels[k] as usize] += 1;
            }
        } else {
            let job = next_initial;
            next_initial += 1;
            eng.busy[k] = true;
            eng.serving[k] = job;
            let e: f64 = Exp1.sample(eng.rng);
            eng.heap.push(Event {
                time: e / profile.rates[k],
                kind: Kind::Departure,
                server: k as u32,
            });
            if let Some(jobs) = eng.jobs.as_mut() {
                jobs.push(JobRecord {
                    id: job,
                    arrival: 0.0,
                    server: Some(k as u32),
                    routed: Some(0.0),
                    departed: None,
                    waited: false,
                    initial: true,
                });
            }
        }
    }
    while next_initial < x0 as u64 {
        let job = next_initial;
        next_initial += 1;
        eng.queue.push_back(job);
        if let Some(jobs) = eng.jobs.as_mut() {
            jobs.push(JobRecord {
                id: job,
                arrival: 0.0,
                server: None,
                routed: None,
                departed: None,
                waited: true,
                initial: true,
            });
        }
    }
    let initial_busy = eng.busy.clone();
    // Job ids after the initial ones continue from x0.
    eng.arrivals = 0;
    let id_offset = x0 as u64;

    if let Some(law) = law {
        let u = law.sample(eng.rng);
        eng.heap.push(Event {
            time: u / lambda_n,
            kind: Kind::Arrival,
            server: 0,
        });
    }

    let mut rows = Vec::new();
    rows.push(eng.row());
    let mut next_grid = 1u64;
    let grid_time = |g: u64, step: f64| g as f64 * step;

    while let Some(ev) = eng.heap.peek().copied() {
        if ev.time > input.horizon {
            break;
        }
        eng.heap.pop();
        if let RecordMode::Grid { step } = opts.mode {
            while grid_time(next_grid, step) < ev.time {
                let gt = grid_time(next_grid, step);
                eng.advance(gt);
                let mut r = eng.row();
                r.t = gt;
                rows.push(r);
                next_grid += 1;
            }
        }
        eng.advance(ev.time);
        match ev.kind {
            Kind::Arrival => {
                // arrivals counter doubles as the job-id cursor past the initial jobs
                let job_id = id_offset + eng.arrivals;
                arrive(&mut eng, job_id);
                let u = law.expect("arrival implies a law").sample(eng.rng);
                eng.heap.push(Event {
                    time: eng.t + u / lambda_n,
                    kind: Kind::Arrival,
                    server: 0,
                });
            }
            Kind::Departure => eng.on_departure(ev.server as usize),
        }
        eng.check_balance();
        if opts.mode == RecordMode::Full {
            rows.push(eng.row());
        }
    }
    if let RecordMode::Grid { step } = opts.mode {
        while grid_time(next_grid, step) <= input.horizon * (1.0 + 1e-12) {
            let gt = grid_time(next_grid, step);
            eng.advance(gt);
            let mut r = eng.row();
            r.t = gt;
            rows.push(r);
            next_grid += 1;
        }
    }
    eng.advance(input.horizon);
    for k in 0..n {
        if eng.busy[k] {
            eng.busy_time[k] += eng.t - eng.busy_since[k];
            eng.busy_since[k] = eng.t;
        }
    }

    let summary = RunSummary {
        end_time: eng.t,
        x: eng.x,
        q: eng.queue.len() as u64,
        i: eng.idle_count,
        arrivals: eng.arrivals,
        departures: eng.departures,
        routings: eng.routings,
        arrivals_waited: eng.waited,
        idle_rate_integral: eng.idle_rate_integral,
        queue_integral: eng.queue_integral,
        x_integral: eng.x_integral,
        initial_busy,
        busy_time: eng.busy_time,
        routings_per_server: eng.routed_k,
        departures_per_server: eng.departed_k,
        final_busy: eng.busy,
    };
    Ok(PathRecord {
        meta: PathMeta {
            n,
            seed: opts.seed,
            policy: input.policy,
            x0,
            horizon: input.horizon,
            lambda_n,
            arrival: law.map(|l| l.name()).unwrap_or_else(|| "none".into()),
            init_fallback,
            classes: opts.classes.as_ref().map(|c| (c.epsilon, c.alpha)),
        },
        rows,
        summary,
        jobs: eng.jobs,
    })
}

fn arrive<R: Rng + ?Sized>(eng: &mut Engine<'_, R>, job_id: u64) {
    let job = job_id;
    eng.arrivals += 1;
    eng.x += 1;
    if let Some(jobs) = eng.jobs.as_mut() {
        debug_assert_eq!(jobs.len() as u64, job);
        jobs.push(JobRecord {
            id: job,
            arrival: eng.t,
            server: None,
            routed: None,
            departed: None,
            waited: false,
            initial: false,
        });
    }
    match eng.idle.take(eng.rng) {
        Some(k) => eng.start(k, job, true),
        None => {
            eng.waited += 1;
            eng.queue.push_back(job);
            if let Some(jobs) = eng.jobs.as_mut() {
                jobs[job as usize].waited = true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ks_distance;
    use crate::seed::{stream, Purpose};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poisson(profile: &RateProfile, policy: PolicyKind, lambda_n: f64, x0: usize, horizon: f64) -> SimInput<'_> {
        SimInput {
            profile,
            arrivals: Arrivals::Renewal {
                law: ArrivalLaw::Exponential,
                lambda_n,
            },
            policy,
            plan: None,
            x0,
            horizon,
        }
    }

    #[test]
    fn single_server_drain_has_unit_mean() {
        let profile = RateProfile::homogeneous(1, 1.0);
        let input = SimInput {
            profile: &profile,
            arrivals: Arrivals::Closed,
            policy: PolicyKind::LowestIndex,
            plan: None,
            x0: 1,
            horizon: 1e3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let reps = 100_000;
        let mut total = 0.0;
        for _ in 0..reps {
            let p = simulate(&input, &RecordOptions::full(), &mut rng).unwrap();
            assert_eq!(p.rows.len(), 2);
            assert_eq!(p.summary.x, 0);
            total += p.rows[1].t;
        }
        let mean = total / reps as f64;
        assert!((mean - 1.0).abs() <= 0.01, "{mean}");
    }

    #[test]
    fn mm1_mean_occupancy() {
        let profile = RateProfile::homogeneous(1, 1.0);
        let input = poisson(&profile, PolicyKind::LowestIndex, 0.5, 0, 4e5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = simulate(&input, &RecordOptions::summary_only(), &mut rng).unwrap();
        let mean = p.summary.x_integral / p.summary.end_time;
        assert!((mean - 1.0).abs() <= 0.05, "{mean}");
        assert_eq!(p.rows.len(), 1);
    }

    #[test]
    fn mm2_waiting_probability() {
        // Erlang C with offered load 1 on two servers: 1/3.
        let profile = RateProfile::homogeneous(2, 1.0);
        for policy in PolicyKind::ALL {
            let input = SimInput {
                plan: None,
                ..poisson(&profile, policy, 1.0, 0, 3e5)
            };
            if policy.needs_plan() {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let p = simulate(&input, &RecordOptions::summary_only(), &mut rng).unwrap();
            let pw = p.summary.arrivals_waited as f64 / p.summary.arrivals as f64;
            assert!((pw - 1.0 / 3.0).abs() <= 0.01, "{policy}: {pw}");
        }
    }

    #[test]
    fn pi0_requires_a_plan() {
        let profile = RateProfile::homogeneous(4, 1.0);
        let input = poisson(&profile, PolicyKind::Pi0, 4.0, 4, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(simulate(&input, &RecordOptions::full(), &mut rng).is_err());
    }

    #[test]
    fn invalid_inputs_rejected() {
        let profile = RateProfile::homogeneous(4, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad_rate = poisson(&profile, PolicyKind::Fsf, 0.0, 4, 1.0);
        assert!(simulate(&bad_rate, &RecordOptions::full(), &mut rng).is_err());
        let bad_horizon = poisson(&profile, PolicyKind::Fsf, 1.0, 4, 0.0);
        assert!(simulate(&bad_horizon, &RecordOptions::full(), &mut rng).is_err());
        let grid = RecordOptions {
            mode: RecordMode::Grid { step: 0.0 },
            ..RecordOptions::full()
        };
        let ok = poisson(&profile, PolicyKind::Fsf, 1.0, 4, 1.0);
        assert!(simulate(&ok, &grid, &mut rng).is_err());
    }

    #[test]
    fn identical_servers_make_policies_equivalent() {
        let profile = RateProfile::homogeneous(50, 1.0);
        let marginal = |policy: PolicyKind| -> Vec<f64> {
            (0..600)
                .map(|rep| {
                    let mut prng = stream(10, 50, rep, Purpose::SamplePlan);
                    let plan = SamplePlan::draw(&profile, 0.6, &mut prng).unwrap();
                    let input = SimInput {
                        plan: Some(&plan),
                        ..poisson(&profile, policy, 50.0 - 50f64.sqrt(), 50, 5.0)
                    };
                    let mut rng = stream(policy.code() as u64, 50, rep, Purpose::Simulation);
                    let p = simulate(&input, &RecordOptions::summary_only(), &mut rng).unwrap();
                    p.summary.x as f64
                })
                .collect()
        };
        let base = marginal(PolicyKind::Pi0);
        for policy in [PolicyKind::Fsf, PolicyKind::RandomIdle, PolicyKind::SlowestFirst] {
            let d = ks_distance(&base, &marginal(policy)).unwrap();
            // 1% two-sample critical value at 600 vs 600
            assert!(d < 1.628 * (2.0f64 / 600.0).sqrt(), "{policy}: {d}");
        }
    }

    #[test]
    fn seeded_runs_are_deterministic_and_round_trip() {
        let mut rates = vec![1.0; 10];
        rates.extend(vec![2.0; 10]);
        let profile = RateProfile::from_explicit(rates).unwrap();
        let mut prng = stream(4, 20, 0, Purpose::SamplePlan);
        let plan = SamplePlan::draw(&profile, 0.6, &mut prng).unwrap();
        let labels = ClassLabels {
            epsilon: 1.0,
            alpha: 1.5,
            labels: profile.rates.iter().map(|&r| if r < 1.5 { 1 } else { 2 }).collect(),
        };
        let opts = RecordOptions::full().with_classes(labels).with_job_log().with_seed(99);
        let input = SimInput {
            plan: Some(&plan),
            ..poisson(&profile, PolicyKind::Pi0, 30.0, 24, 3.0)
        };
        let run = || simulate(&input, &opts, &mut stream(4, 20, 0, Purpose::Simulation)).unwrap();
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.meta.seed, 99);
        assert!(!a.meta.init_fallback);

        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let back = PathRecord::read_csv(csv.as_slice()).unwrap();
        assert_eq!(back.meta, a.meta);
        assert_eq!(back.rows, a.rows);

        let mut bin = Vec::new();
        a.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 56 + BINARY_ROW_BYTES * a.rows.len());
        let back = PathRecord::read_binary(bin.as_slice()).unwrap();
        assert_eq!(back.rows, a.rows);
        assert_eq!(back.meta.policy, PolicyKind::Pi0);
        assert_eq!(back.meta.x0, 24);
    }

    #[test]
    fn grid_recording_samples_the_full_path() {
        let profile = RateProfile::homogeneous(10, 1.0);
        let input = poisson(&profile, PolicyKind::RandomIdle, 9.0, 10, 4.0);
        let full = simulate(&input, &RecordOptions::full(), &mut stream(1, 10, 0, Purpose::Simulation)).unwrap();
        let grid_opts = RecordOptions {
            mode: RecordMode::Grid { step: 0.5 },
            ..RecordOptions::full()
        };
        let grid = simulate(&input, &grid_opts, &mut stream(1, 10, 0, Purpose::Simulation)).unwrap();
        assert_eq!(grid.rows.len(), 9);
        for r in &grid.rows {
            assert_eq!(Some(r.x), full.x_at(r.t), "t = {}", r.t);
        }
        assert_eq!(grid.summary.arrivals, full.summary.arrivals);
        assert_eq!(grid.summary.departures, full.summary.departures);
        assert!((grid.summary.x_integral - full.summary.x_integral).abs() < 1e-9);
    }

    #[test]
    fn pi0_starts_with_lowest_ranks_idle() {
        let profile = RateProfile::from_explicit((1..=20).map(|k| k as f64 / 4.0).collect()).unwrap();
        let mut prng = stream(8, 20, 0, Purpose::SamplePlan);
        let plan = SamplePlan::draw(&profile, 0.6, &mut prng).unwrap();
        let input = SimInput {
            plan: Some(&plan),
            ..poisson(&profile, PolicyKind::Pi0, 5.0, 15, 1.0)
        };
        let p = simulate(&input, &RecordOptions::full(), &mut stream(8, 20, 0, Purpose::Simulation)).unwrap();
        for k in 0..20 {
            assert_eq!(p.summary.initial_busy[k], plan.rank[k] > 5, "server {k}");
        }
        let fsf = SimInput {
            policy: PolicyKind::Fsf,
            plan: None,
            ..input
        };
        let q = simulate(&fsf, &RecordOptions::full(), &mut stream(8, 20, 0, Purpose::Simulation)).unwrap();
        assert!(q.meta.init_fallback);
        assert!(q.summary.initial_busy[..5].iter().all(|b| !b));
    }
}
