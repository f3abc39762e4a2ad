//! Routing policies and the idle-server structures that serve them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::sampling::SamplePlan;
use crate::scenario::RateProfile;

/// The implemented work-conserving, non-interrupting policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    /// Highest sampled rank among idle servers.
    Pi0,
    /// Fastest true rate first.
    Fsf,
    RandomIdle,
    LowestIndex,
    /// Slowest true rate first.
    SlowestFirst,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Pi0,
        PolicyKind::Fsf,
        PolicyKind::RandomIdle,
        PolicyKind::LowestIndex,
        PolicyKind::SlowestFirst,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Pi0 => "PI0",
            PolicyKind::Fsf => "FSF",
            PolicyKind::RandomIdle => "RandomIdle",
            PolicyKind::LowestIndex => "LowestIndex",
            PolicyKind::SlowestFirst => "SlowestFirst",
        }
    }

    pub fn needs_plan(&self) -> bool {
        matches!(self, PolicyKind::Pi0)
    }

    pub fn code(&self) -> u8 {
        match self {
            PolicyKind::Pi0 => 0,
            PolicyKind::Fsf => 1,
            PolicyKind::RandomIdle => 2,
            PolicyKind::LowestIndex => 3,
            PolicyKind::SlowestFirst => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        match key.as_str() {
            "pi0" | "π0" => Ok(PolicyKind::Pi0),
            "fsf" => Ok(PolicyKind::Fsf),
            "randomidle" | "random" => Ok(PolicyKind::RandomIdle),
            "lowestindex" | "lowest" => Ok(PolicyKind::LowestIndex),
            "slowestfirst" | "slowest" => Ok(PolicyKind::SlowestFirst),
            _ => argument(format!(
                "unknown policy '{s}' (expected PI0, FSF, RandomIdle, LowestIndex, SlowestFirst)"
            )),
        }
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(p: PolicyKind) -> String {
        p.name().to_string()
    }
}

/// Information a policy may consult when routing.
#[derive(Debug, Clone, Copy)]
pub enum RoutingContext<'a> {
    Ranks(&'a [u32]),
    Rates(&'a [f64]),
    None,
}

/// Pick the server an arriving job is routed to, among `idle`.
pub fn choose_server<R: Rng + ?Sized>(
    policy: PolicyKind,
    idle: &[usize],
    ctx: RoutingContext<'_>,
    rng: &mut R,
) -> Result<usize> {
    if idle.is_empty() {
        return Err(Error::Argument(
            "no idle server to route to; the job must be queued".into(),
        ));
    }
    let pick = match (policy, ctx) {
        (PolicyKind::Pi0, RoutingContext::Ranks(rank)) => *idle
            .iter()
            .max_by_key(|&&k| rank[k])
            .expect("nonempty"),
        (PolicyKind::Pi0, _) => return argument("PI0 routing needs server ranks"),
        (PolicyKind::Fsf, RoutingContext::Rates(rates)) => {
            let mut best = idle[0];
            for &k in &idle[1..] {
                if rates[k] > rates[best] || (rates[k] == rates[best] && k < best) {
                    best = k;
                }
            }
            best
        }
        (PolicyKind::SlowestFirst, RoutingContext::Rates(rates)) => {
            let mut best = idle[0];
            for &k in &idle[1..] {
                if rates[k] < rates[best] || (rates[k] == rates[best] && k < best) {
                    best = k;
                }
            }
            best
        }
        (PolicyKind::Fsf | PolicyKind::SlowestFirst, _) => {
            return argument(format!("{policy} routing needs service rates"))
        }
        (PolicyKind::RandomIdle, _) => idle[rng.random_range(0..idle.len())],
        (PolicyKind::LowestIndex, _) => *idle.iter().min().expect("nonempty"),
    };
    Ok(pick)
}

/// Static priority of each server (higher is preferred) for the
/// deterministic policies; a permutation of `1..=n`.
pub fn priorities(
    policy: PolicyKind,
    profile: &RateProfile,
    plan: Option<&SamplePlan>,
) -> Result<Option<Vec<u32>>> {
    let n = profile.n();
    let by_order = |order: Vec<usize>| {
        // order lists servers from lowest to highest priority
        let mut prio = vec![0u32; n];
        for (pos, k) in order.into_iter().enumerate() {
            prio[k] = pos as u32 + 1;
        }
        prio
    };
    let rates = &profile.rates;
    Ok(match policy {
        PolicyKind::Pi0 => {
            let plan = plan.ok_or_else(|| {
                Error::Argument("PI0 needs a sample plan attached".into())
            })?;
            if plan.n != n {
                return argument(format!(
                    "sample plan is for n = {}, profile has n = {n}",
                    plan.n
                ));
            }
            Some(plan.rank.clone())
        }
        PolicyKind::Fsf => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&k, &l| rates[k].total_cmp(&rates[l]).then(l.cmp(&k)));
            Some(by_order(order))
        }
        PolicyKind::SlowestFirst => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&k, &l| rates[l].total_cmp(&rates[k]).then(l.cmp(&k)));
            Some(by_order(order))
        }
        PolicyKind::LowestIndex => Some(by_order((0..n).rev().collect())),
        PolicyKind::RandomIdle => None,
    })
}

/// Set of idle servers supporting O(log n) policy choice.
#[derive(Debug, Clone)]
pub(crate) enum IdleSet {
    Priority {
        prio: Vec<u32>,
        server_at: Vec<usize>,
        members: BTreeSet<u32>,
    },
    Uniform {
        members: Vec<usize>,
        slot: Vec<usize>,
    },
}

const ABSENT: usize = usize::MAX;

impl IdleSet {
    pub(crate) fn new(n: usize, prio: Option<Vec<u32>>) -> Self {
        match prio {
            Some(prio) => {
                let mut server_at = vec![0usize; n + 1];
                for (k, &p) in prio.iter().enumerate() {
                    server_at[p as usize] = k;
                }
                IdleSet::Priority {
                    prio,
                    server_at,
                    members: BTreeSet::new(),
                }
            }
            None => IdleSet::Uniform {
                members: Vec::with_capacity(n),
                slot: vec![ABSENT; n],
            },
        }
    }

    pub(crate) fn insert(&mut self, k: usize) {
        match self {
            IdleSet::Priority { prio, members, .. } => {
                let fresh = members.insert(prio[k]);
                debug_assert!(fresh, "server {k} already idle");
            }
            IdleSet::Uniform { members, slot } => {
                debug_assert_eq!(slot[k], ABSENT, "server {k} already idle");
                slot[k] = members.len();
                members.push(k);
            }
        }
    }

    /// Remove and return the policy's choice, or `None` when all are busy.
    pub(crate) fn take<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        match self {
            IdleSet::Priority {
                server_at, members, ..
            } => members.pop_last().map(|p| server_at[p as usize]),
            IdleSet::Uniform { members, slot } => {
                if members.is_empty() {
                    return None;
                }
                let i = rng.random_range(0..members.len());
                let k = members.swap_remove(i);
                if let Some(&moved) = members.get(i) {
                    slot[moved] = i;
                }
                slot[k] = ABSENT;
                Some(k)
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn members(&self) -> Vec<usize> {
        let mut v: Vec<usize> = match self {
            IdleSet::Priority {
                server_at, members, ..
            } => members.iter().map(|&p| server_at[p as usize]).collect(),
            IdleSet::Uniform { members, .. } => members.clone(),
        };
        v.sort_unstable();
        v
    }
}
