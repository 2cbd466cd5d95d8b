//! Baseline schemes: local execution (LE), total offloading (TO) and greedy
//! offloading (GO), each paired with most-recent (MRC) or most-popular
//! (MPC) caching. Proposals are projected onto the feasible action sets.

use std::fmt;
use std::str::FromStr;

use crate::caching::{apply_caching_action, CacheState, Eviction};
use crate::error::{Error, Result};
use crate::evaluator::{feasible_actions, must_cache, subtask_reward, ActionMatrix, ActionPair, EpisodeState, PriceVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OffloadBaseline {
    LocalExecution,
    TotalOffload,
    Greedy,
}

impl OffloadBaseline {
    fn tag(self) -> &'static str {
        match self {
            OffloadBaseline::LocalExecution => "le",
            OffloadBaseline::TotalOffload => "to",
            OffloadBaseline::Greedy => "go",
        }
    }
}

/// Every decision scheme that can be run over an episode stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// The trained imitation policy.
    Docs,
    Oracle,
    Baseline(OffloadBaseline, Eviction),
}

impl Scheme {
    /// Baselines in reporting order.
    pub const BASELINES: [Scheme; 6] = [
        Scheme::Baseline(OffloadBaseline::TotalOffload, Eviction::MostRecent),
        Scheme::Baseline(OffloadBaseline::LocalExecution, Eviction::MostRecent),
        Scheme::Baseline(OffloadBaseline::TotalOffload, Eviction::MostPopular),
        Scheme::Baseline(OffloadBaseline::LocalExecution, Eviction::MostPopular),
        Scheme::Baseline(OffloadBaseline::Greedy, Eviction::MostRecent),
        Scheme::Baseline(OffloadBaseline::Greedy, Eviction::MostPopular),
    ];

    /// Eviction policy the scheme's cache runs under.
    pub fn eviction(self) -> Eviction {
        match self {
            Scheme::Baseline(_, e) => e,
            Scheme::Docs | Scheme::Oracle => Eviction::MostRecent,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Docs => f.write_str("docs"),
            Scheme::Oracle => f.write_str("oracle"),
            Scheme::Baseline(o, e) => {
                let cache = match e {
                    Eviction::MostRecent => "mrc",
                    Eviction::MostPopular => "mpc",
                };
                write!(f, "{}-{cache}", o.tag())
            }
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use Eviction::*;
        use OffloadBaseline::*;
        Ok(match s {
            "docs" => Scheme::Docs,
            "oracle" => Scheme::Oracle,
            "le-mrc" => Scheme::Baseline(LocalExecution, MostRecent),
            "le-mpc" => Scheme::Baseline(LocalExecution, MostPopular),
            "to-mrc" => Scheme::Baseline(TotalOffload, MostRecent),
            "to-mpc" => Scheme::Baseline(TotalOffload, MostPopular),
            "go-mrc" => Scheme::Baseline(Greedy, MostRecent),
            "go-mpc" => Scheme::Baseline(Greedy, MostPopular),
            other => return Err(Error::Config(format!("unknown policy {other:?}"))),
        })
    }
}

/// Greedy choice for one sub-task: the feasible pair with the smallest
/// immediate reward contribution.
pub fn greedy_pair(v: usize, state: &EpisodeState, prices: &PriceVector) -> ActionPair {
    let st = &state.task.subtasks()[v];
    let mut best: Option<(ActionPair, f64)> = None;
    for pair in feasible_actions(st, state).iter() {
        let r = subtask_reward(st, pair, state, prices);
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((pair, r));
        }
    }
    best.expect("feasible sets are never empty").0
}

/// Offloading bits proposed by a baseline, before projection.
pub fn baseline_offload(kind: OffloadBaseline, state: &EpisodeState, prices: &PriceVector) -> Vec<bool> {
    let n = state.task.len();
    match kind {
        OffloadBaseline::LocalExecution => vec![false; n],
        OffloadBaseline::TotalOffload => vec![true; n],
        OffloadBaseline::Greedy => (0..n).map(|v| greedy_pair(v, state, prices).offload).collect(),
    }
}

/// Caching bits proposed by a baseline and the cache the eviction policy
/// leaves behind. Every output is proposed for caching; `kind` decides
/// what the cache retains.
pub fn baseline_cache(kind: Eviction, state: &EpisodeState, offload: &[bool]) -> Result<(Vec<bool>, CacheState)> {
    if offload.len() != state.task.len() {
        return Err(Error::ActionLength {
            expected: state.task.len(),
            got: offload.len(),
        });
    }
    let bits: Vec<bool> = state
        .task
        .subtasks()
        .iter()
        .map(|st| st.d_out() > 0 || must_cache(st, state))
        .collect();
    let next = apply_caching_action(&state.cache, &state.task, &bits, kind)?;
    Ok((bits, next))
}

/// Keeps feasible pairs; replaces the rest by the nearest feasible pair in
/// Hamming distance, earliest pair first on ties.
pub fn project_feasible(proposal: &[ActionPair], state: &EpisodeState) -> Result<ActionMatrix> {
    if proposal.len() != state.task.len() {
        return Err(Error::ActionLength {
            expected: state.task.len(),
            got: proposal.len(),
        });
    }
    let pairs: Vec<ActionPair> = state
        .task
        .subtasks()
        .iter()
        .zip(proposal)
        .map(|(st, &want)| {
            let feasible = feasible_actions(st, state);
            if feasible.contains(want) {
                want
            } else {
                feasible
                    .iter()
                    .min_by_key(|p| p.hamming(want))
                    .expect("feasible sets are never empty")
            }
        })
        .collect();
    Ok(ActionMatrix::from_pairs(&pairs))
}

/// Final (projected) action of a baseline and the cache it leaves behind.
pub fn baseline_action(
    offload_kind: OffloadBaseline,
    eviction: Eviction,
    state: &EpisodeState,
    prices: &PriceVector,
) -> Result<(ActionMatrix, CacheState)> {
    let offload = baseline_offload(offload_kind, state, prices);
    let (cache_bits, _) = baseline_cache(eviction, state, &offload)?;
    let proposal: Vec<ActionPair> = offload
        .iter()
        .zip(&cache_bits)
        .map(|(&o, &c)| ActionPair::new(o, c))
        .collect();
    let actions = project_feasible(&proposal, state)?;
    let next = apply_caching_action(&state.cache, &state.task, actions.cache(), eviction)?;
    Ok((actions, next))
}
