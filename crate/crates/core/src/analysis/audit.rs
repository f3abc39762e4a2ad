//! Structural checks of a recorded path: state balance, counting
//! identities, and (with a job log) FIFO order and uninterrupted service.

use serde::Serialize;

use crate::error::{argument, Result};
use crate::sim::PathRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// First offending record (row index or job id) and a description.
    pub first_failure: Option<(u64, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub n: usize,
    pub rows: usize,
    pub checks: Vec<CheckResult>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Checker {
    checks: Vec<CheckResult>,
}

impl Checker {
    fn run<I>(&mut self, name: &'static str, items: I)
    where
        I: IntoIterator<Item = (u64, Option<String>)>,
    {
        let first_failure = items
            .into_iter()
            .find_map(|(at, fail)| fail.map(|msg| (at, msg)));
        self.checks.push(CheckResult {
            name,
            passed: first_failure.is_none(),
            first_failure,
        });
    }
}

fn fail_if(cond: bool, msg: impl FnOnce() -> String) -> Option<String> {
    cond.then(msg)
}

/// Audit a path of an `n`-server system. Row checks apply to every
/// recording mode; job checks run only when the path carries a job log.
pub fn invariant_audit(path: &PathRecord, n: usize) -> Result<InvariantReport> {
    if path.n() != n {
        return argument(format!("path has {} servers, expected {n}", path.n()));
    }
    let rows = &path.rows;
    let Some(first) = rows.first() else {
        return argument("path has no rows");
    };
    let n64 = n as i64;
    let mut c = Checker { checks: Vec::new() };

    c.run(
        "initial_state",
        std::iter::once((
            0,
            fail_if(
                first.x as usize != path.meta.x0 || first.a != 0 || first.d != 0 || first.t != 0.0,
                || format!("first row {first:?} does not match x0 = {}", path.meta.x0),
            ),
        )),
    );
    c.run(
        "time_order",
        rows.windows(2).enumerate().map(|(j, w)| {
            (
                j as u64 + 1,
                fail_if(!(w[1].t >= w[0].t), || format!("t {} after {}", w[1].t, w[0].t)),
            )
        }),
    );
    c.run(
        "work_conservation",
        rows.iter().enumerate().map(|(j, r)| {
            let excess = r.x as i64 - n64;
            (
                j as u64,
                fail_if(
                    r.q as i64 != excess.max(0) || r.i as i64 != (-excess).max(0),
                    || format!("X = {}, Q = {}, I = {} with n = {n}", r.x, r.q, r.i),
                ),
            )
        }),
    );
    c.run(
        "occupancy_balance",
        rows.iter().enumerate().map(|(j, r)| {
            (
                j as u64,
                fail_if(
                    r.i as usize > n || r.x as i64 != r.q as i64 + n64 - r.i as i64,
                    || format!("X = {} but Q + n - I = {}", r.x, r.q as i64 + n64 - r.i as i64),
                ),
            )
        }),
    );
    c.run(
        "system_count",
        rows.iter().enumerate().map(|(j, r)| {
            let expect = first.x as i64 + r.a as i64 - r.d as i64;
            (
                j as u64,
                fail_if(r.x as i64 != expect, || {
                    format!("X = {} but X(0) + A - D = {expect}", r.x)
                }),
            )
        }),
    );
    c.run(
        "buffer_count",
        rows.iter().enumerate().map(|(j, r)| {
            let expect = first.q as i64 + r.a as i64 - r.r as i64;
            (
                j as u64,
                fail_if(r.q as i64 != expect, || {
                    format!("Q = {} but Q(0) + A - R = {expect}", r.q)
                }),
            )
        }),
    );
    c.run(
        "busy_count",
        rows.iter().enumerate().map(|(j, r)| {
            let busy = n64 - r.i as i64;
            let expect = n64 - first.i as i64 + r.r as i64 - r.d as i64;
            (
                j as u64,
                fail_if(busy != expect, || {
                    format!("busy = {busy} but busy(0) + R - D = {expect}")
                }),
            )
        }),
    );
    c.run(
        "counters_monotone",
        rows.windows(2).enumerate().map(|(j, w)| {
            (
                j as u64 + 1,
                fail_if(
                    w[1].a < w[0].a || w[1].d < w[0].d || w[1].r < w[0].r,
                    || "a cumulative counter decreased".to_string(),
                ),
            )
        }),
    );
    c.run(
        "idle_integral_monotone",
        rows.windows(2).enumerate().map(|(j, w)| {
            (
                j as u64 + 1,
                fail_if(!(w[1].idle_rate_integral >= w[0].idle_rate_integral), || {
                    format!(
                        "integral {} after {}",
                        w[1].idle_rate_integral, w[0].idle_rate_integral
                    )
                }),
            )
        }),
    );
    if path.meta.classes.is_some() {
        c.run(
            "class_counts",
            rows.iter().enumerate().map(|(j, r)| {
                let sum: u32 = r.i_class.iter().sum();
                (
                    j as u64,
                    fail_if(sum != r.i, || format!("class idle sum {sum} != I = {}", r.i)),
                )
            }),
        );
    }
    if let Some(jobs) = &path.jobs {
        job_checks(path, jobs, &mut c);
    }
    Ok(InvariantReport {
        n,
        rows: rows.len(),
        checks: c.checks,
    })
}

fn job_checks(path: &PathRecord, jobs: &[crate::sim::JobRecord], c: &mut Checker) {
    let n = path.n();
    let s = &path.summary;

    c.run(
        "job_ids",
        jobs.iter().enumerate().map(|(j, job)| {
            (
                job.id,
                fail_if(job.id != j as u64, || format!("job at position {j} has id {}", job.id)),
            )
        }),
    );
    // A job is routed at most once, departs only from the server it was
    // routed to, and never before being routed.
    c.run(
        "non_interruption",
        jobs.iter().map(|job| {
            let bad = match (job.server, job.routed, job.departed) {
                (_, None, Some(_)) => Some("departed without being routed".to_string()),
                (None, Some(_), _) => Some("routed without a server".to_string()),
                (Some(k), _, _) if k as usize >= n => Some(format!("server {k} out of range")),
                (_, Some(r), _) if r < job.arrival => Some("routed before arrival".to_string()),
                (_, Some(r), Some(d)) if d < r => Some("departed before routed".to_string()),
                _ => None,
            };
            (job.id, bad)
        }),
    );

    // Per-server service intervals must not overlap, so each server holds
    // at most one job at a time (B_k in {0, 1}).
    let mut intervals: Vec<Vec<(f64, f64, u64)>> = vec![Vec::new(); n];
    for job in jobs {
        if let (Some(k), Some(r)) = (job.server, job.routed) {
            if (k as usize) < n {
                let end = job.departed.unwrap_or(f64::INFINITY);
                intervals[k as usize].push((r, end, job.id));
            }
        }
    }
    c.run(
        "busy_indicator",
        intervals.iter_mut().enumerate().flat_map(|(k, iv)| {
            iv.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
            let open = iv.iter().filter(|x| x.1.is_infinite()).count();
            let mut out: Vec<(u64, Option<String>)> = iv
                .windows(2)
                .map(|w| {
                    (
                        w[1].2,
                        fail_if(w[1].0 < w[0].1, || {
                            format!("server {k} starts job {} before job {} ends", w[1].2, w[0].2)
                        }),
                    )
                })
                .collect();
            out.push((
                k as u64,
                fail_if(open > 1, || format!("server {k} holds {open} unfinished jobs")),
            ));
            if !s.final_busy.is_empty() {
                out.push((
                    k as u64,
                    fail_if((open == 1) != s.final_busy[k], || {
                        format!("server {k} final busy flag disagrees with the job log")
                    }),
                ));
            }
            out
        }),
    );

    // Per-server counting: B_k(t) = B_k(0) + R_k(t) - D_k(t).
    if !s.routings_per_server.is_empty() {
        let mut routed = vec![0u64; n];
        let mut departed = vec![0u64; n];
        for job in jobs {
            if let Some(k) = job.server {
                let k = k as usize;
                if k < n {
                    if !(job.initial && job.routed == Some(0.0) && !job.waited) {
                        routed[k] += 1;
                    }
                    if job.departed.is_some() {
                        departed[k] += 1;
                    }
                }
            }
        }
        c.run(
            "server_counts",
            (0..n).map(|k| {
                let b0 = u64::from(s.initial_busy[k]);
                let b1 = u64::from(s.final_busy[k]);
                let bad = routed[k] != s.routings_per_server[k]
                    || departed[k] != s.departures_per_server[k]
                    || b1 + departed[k] != b0 + routed[k];
                (
                    k as u64,
                    fail_if(bad, || {
                        format!(
                            "server {k}: B(0) = {b0}, R = {}, D = {}, B(T) = {b1}",
                            routed[k], departed[k]
                        )
                    }),
                )
            }),
        );
    }

    // FIFO: jobs that waited enter service in arrival order, and no job
    // is still waiting while a later one has been served from the buffer.
    let waited: Vec<_> = jobs.iter().filter(|j| j.waited).collect();
    let mut fifo_items = Vec::new();
    for w in waited.windows(2) {
        let (a, b) = (w[0], w[1]);
        let bad = match (a.routed, b.routed) {
            (Some(ra), Some(rb)) => rb < ra,
            (None, Some(_)) => true,
            _ => false,
        };
        fifo_items.push((
            b.id,
            fail_if(bad, || format!("job {} left the buffer before job {}", b.id, a.id)),
        ));
    }
    c.run("fifo", fifo_items);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ClassPartition;
    use crate::sampling::SamplePlan;
    use crate::scenario::{ArrivalLaw, RateProfile};
    use crate::seed::{stream, Purpose};
    use crate::sim::{simulate, Arrivals, PolicyKind, RecordOptions, SimInput};

    fn audited_run(n: usize, policy: PolicyKind, seed: u64, x0: usize) -> PathRecord {
        let rates = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let profile = RateProfile::from_explicit(rates).unwrap();
        let part = ClassPartition {
            epsilon: 1.0,
            alpha: 1.5,
        };
        let mut prng = stream(seed, n as u64, 0, Purpose::SamplePlan);
        let plan = SamplePlan::draw(&profile, 0.6, &mut prng).unwrap();
        let lambda_n = profile.total_rate();
        let input = SimInput {
            profile: &profile,
            arrivals: Arrivals::Renewal {
                law: ArrivalLaw::Exponential,
                lambda_n,
            },
            policy,
            plan: Some(&plan),
            x0,
            horizon: 5.0,
        };
        let opts = RecordOptions::full()
            .with_classes(part.labels(&profile).unwrap())
            .with_job_log();
        let mut rng = stream(seed, n as u64, 0, Purpose::Simulation);
        simulate(&input, &opts, &mut rng).unwrap()
    }

    #[test]
    fn simulated_paths_pass_every_check() {
        for policy in PolicyKind::ALL {
            for (n, x0) in [(1, 0), (10, 7), (10, 14), (60, 60)] {
                let path = audited_run(n, policy, 3, x0);
                let report = invariant_audit(&path, n).unwrap();
                assert!(report.passed(), "{policy} n={n}: {:?}", report.failures().next());
                for name in ["fifo", "busy_indicator", "server_counts", "class_counts"] {
                    assert!(report.check(name).is_some(), "{name} missing");
                }
            }
        }
    }

    #[test]
    fn broken_balance_is_caught() {
        let mut path = audited_run(10, PolicyKind::Pi0, 1, 10);
        let j = path.rows.len() / 2;
        path.rows[j].q += 1;
        let report = invariant_audit(&path, 10).unwrap();
        assert!(!report.check("work_conservation").unwrap().passed);
        assert!(!report.check("buffer_count").unwrap().passed);
        assert_eq!(report.check("work_conservation").unwrap().first_failure.as_ref().unwrap().0, j as u64);
    }

    #[test]
    fn fifo_violation_is_caught() {
        let mut path = audited_run(10, PolicyKind::Fsf, 2, 15);
        let jobs = path.jobs.as_mut().unwrap();
        let waited: Vec<usize> = (0..jobs.len())
            .filter(|&j| jobs[j].waited && jobs[j].routed.is_some())
            .collect();
        assert!(waited.len() >= 2);
        let (a, b) = (waited[0], waited[1]);
        let (ra, rb) = (jobs[a].routed, jobs[b].routed);
        jobs[a].routed = rb;
        jobs[b].routed = ra;
        if ra != rb {
            let report = invariant_audit(&path, 10).unwrap();
            assert!(!report.check("fifo").unwrap().passed);
        }
    }

    #[test]
    fn overlapping_service_is_caught() {
        let mut path = audited_run(10, PolicyKind::LowestIndex, 4, 10);
        let jobs = path.jobs.as_mut().unwrap();
        let k0 = jobs[0].server;
        let other = jobs
            .iter()
            .position(|j| j.server.is_some() && j.server != k0 && j.routed.is_some())
            .unwrap();
        jobs[other].server = k0;
        let report = invariant_audit(&path, 10).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn wrong_size_rejected() {
        let path = audited_run(10, PolicyKind::Pi0, 1, 10);
        assert!(invariant_audit(&path, 11).is_err());
    }
}
