//! Pre-classified action sets, completion times and the episode reward.
//!
//! Action pairs are written `(offload, cache)`: `10` offloads without
//! caching, `01` runs on the satellite and caches the output. Pairs are
//! totally ordered lexicographically with `0 < 1`, which is the tie-break
//! used everywhere an argmin or argmax has several solutions.

use std::fmt;

use crate::caching::CacheState;
use crate::channel::LinkState;
use crate::error::{Error, Result};
use crate::workload::{Category, SubTask, TaskGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionPair {
    pub offload: bool,
    pub cache: bool,
}

impl ActionPair {
    /// All four pairs in tie-break order.
    pub const ALL: [ActionPair; 4] = [
        ActionPair::new(false, false),
        ActionPair::new(false, true),
        ActionPair::new(true, false),
        ActionPair::new(true, true),
    ];

    pub const fn new(offload: bool, cache: bool) -> Self {
        ActionPair { offload, cache }
    }

    pub fn code(self) -> u8 {
        (self.offload as u8) << 1 | self.cache as u8
    }

    pub fn from_code(code: u8) -> Self {
        ActionPair::new(code & 2 != 0, code & 1 != 0)
    }

    pub fn hamming(self, other: ActionPair) -> u32 {
        (self.code() ^ other.code()).count_ones()
    }
}

impl fmt::Display for ActionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.offload as u8, self.cache as u8)
    }
}

/// Subset of the four action pairs, as a bitmask over pair codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibleSet(u8);

impl FeasibleSet {
    pub fn from_pairs(pairs: &[ActionPair]) -> Self {
        FeasibleSet(pairs.iter().fold(0, |m, p| m | 1 << p.code()))
    }

    pub fn contains(self, pair: ActionPair) -> bool {
        self.0 & (1 << pair.code()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in tie-break order.
    pub fn iter(self) -> impl Iterator<Item = ActionPair> {
        ActionPair::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

/// Offloading and caching bits for every sub-task of a task.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionMatrix {
    offload: Vec<bool>,
    cache: Vec<bool>,
}

impl ActionMatrix {
    pub fn new(offload: Vec<bool>, cache: Vec<bool>) -> Result<Self> {
        if offload.len() != cache.len() {
            return Err(Error::ActionLength {
                expected: offload.len(),
                got: cache.len(),
            });
        }
        Ok(ActionMatrix { offload, cache })
    }

    pub fn from_pairs(pairs: &[ActionPair]) -> Self {
        ActionMatrix {
            offload: pairs.iter().map(|p| p.offload).collect(),
            cache: pairs.iter().map(|p| p.cache).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.offload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offload.is_empty()
    }

    pub fn offload(&self) -> &[bool] {
        &self.offload
    }

    pub fn cache(&self) -> &[bool] {
        &self.cache
    }

    pub fn pair(&self, v: usize) -> ActionPair {
        ActionPair::new(self.offload[v], self.cache[v])
    }

    pub fn pairs(&self) -> impl Iterator<Item = ActionPair> + '_ {
        (0..self.len()).map(|v| self.pair(v))
    }

    /// Label vector: offload bits followed by cache bits.
    pub fn labels(&self) -> Vec<f64> {
        self.offload
            .iter()
            .chain(&self.cache)
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }

    /// Label bits as a `0`/`1` string, offload bits first.
    pub fn label_bits(&self) -> String {
        self.offload
            .iter()
            .chain(&self.cache)
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    pub fn from_label_bits(bits: &str) -> Result<Self> {
        if !bits.len().is_multiple_of(2) {
            return Err(Error::Domain(format!("odd label length {}", bits.len())));
        }
        let parsed = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Domain(format!("label bit {c:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        let (of, ch) = parsed.split_at(bits.len() / 2);
        ActionMatrix::new(of.to_vec(), ch.to_vec())
    }
}

/// Unit prices of the reward terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceVector {
    /// Per CPU cycle spent on the satellite.
    pub compute: f64,
    /// Per byte offloaded to the ground.
    pub communication: f64,
    /// Per byte cached.
    pub cache: f64,
    /// Per second of completion time.
    pub completion: f64,
}

impl Default for PriceVector {
    fn default() -> Self {
        PriceVector {
            compute: 1e-10,
            communication: 1e-6,
            cache: 1e-6,
            completion: 0.2,
        }
    }
}

impl PriceVector {
    pub fn completion_only(weight: f64) -> Self {
        PriceVector {
            compute: 0.0,
            communication: 0.0,
            cache: 0.0,
            completion: weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.compute, self.communication, self.cache, self.completion];
        if all.iter().all(|p| *p >= 0.0 && p.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("prices must be finite and non-negative".into()))
        }
    }
}

/// Everything the decision maker observes at the start of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub task: TaskGraph,
    /// Remaining coverage time of the serving satellite, seconds.
    pub coverage_time_s: f64,
    pub link: LinkState,
    /// Satellite CPU frequency, cycles/s.
    pub cpu_hz: f64,
    pub cache: CacheState,
}

impl EpisodeState {
    pub fn new(
        task: TaskGraph,
        coverage_time_s: f64,
        link: LinkState,
        cpu_hz: f64,
        cache: CacheState,
    ) -> Result<Self> {
        if !(coverage_time_s > 0.0) {
            return Err(Error::Domain(format!(
                "coverage time {coverage_time_s} must be positive"
            )));
        }
        if !(cpu_hz > 0.0) {
            return Err(Error::Domain(format!("CPU frequency {cpu_hz} must be positive")));
        }
        Ok(EpisodeState {
            task,
            coverage_time_s,
            link,
            cpu_hz,
            cache,
        })
    }

    pub fn is_hit(&self, st: &SubTask) -> bool {
        self.cache.is_hit(st.out_rank())
    }
}

/// Time to return a sub-task's output to the vehicle, propagation included.
pub fn return_time(st: &SubTask, state: &EpisodeState) -> f64 {
    state.link.downlink_time(st.d_out() as f64) + state.link.delay_fh_s()
}

/// Whether the output cannot reach the vehicle before the satellite leaves,
/// so it has to be cached for retransmission.
pub fn must_cache(st: &SubTask, state: &EpisodeState) -> bool {
    st.d_out() > 0 && !(return_time(st, state) < state.coverage_time_s)
}

pub fn feasible_actions(st: &SubTask, state: &EpisodeState) -> FeasibleSet {
    use ActionPair as P;
    let forced = must_cache(st, state);
    match (st.category(), forced) {
        (Category::Upload, _) => FeasibleSet::from_pairs(&[P::new(true, false), P::new(true, true)]),
        (Category::Download, false) => {
            FeasibleSet::from_pairs(&[P::new(false, false), P::new(false, true)])
        }
        (Category::Download, true) => FeasibleSet::from_pairs(&[P::new(false, true)]),
        (Category::Compute, false) => FeasibleSet::from_pairs(&ActionPair::ALL),
        (Category::Compute, true) => FeasibleSet::from_pairs(&[P::new(false, true), P::new(true, true)]),
    }
}

/// Completion time of one sub-task.
pub fn subtask_time(st: &SubTask, offload: bool, hit: bool, state: &EpisodeState) -> f64 {
    let link = &state.link;
    let d_vs = link.delay_fh_s();
    let d_sg = link.delay_bh_s();
    let d_in = st.d_in() as f64;
    let d_out = st.d_out() as f64;
    match st.category() {
        Category::Upload => link.uplink_time(d_in) + d_vs + link.backhaul_time(d_in) + d_sg,
        Category::Download if hit => link.downlink_time(d_out) + d_vs,
        Category::Download => link.backhaul_time(d_out) + d_sg + link.downlink_time(d_out) + d_vs,
        Category::Compute => {
            let arrive = link.uplink_time(d_in) + d_vs;
            let back = link.downlink_time(d_out) + d_vs;
            if hit {
                arrive + back
            } else if offload {
                arrive + link.backhaul_time(d_in) + d_sg + back
            } else {
                arrive + st.zeta() / state.cpu_hz + back
            }
        }
    }
}

/// Reward contribution of one sub-task. A cache hit skips processing, so
/// only the caching and time terms are charged.
pub fn subtask_reward(st: &SubTask, pair: ActionPair, state: &EpisodeState, prices: &PriceVector) -> f64 {
    let hit = state.is_hit(st);
    let time = subtask_time(st, pair.offload, hit, state);
    let processing = if hit {
        0.0
    } else if pair.offload {
        prices.communication * st.d_in() as f64
    } else {
        prices.compute * st.zeta()
    };
    let caching = if pair.cache {
        prices.cache * st.d_out() as f64
    } else {
        0.0
    };
    processing + caching + prices.completion * time
}

/// Checks every pair of `actions` against its pre-classified set.
pub fn validate_actions(state: &EpisodeState, actions: &ActionMatrix) -> Result<()> {
    let task = &state.task;
    if actions.len() != task.len() {
        return Err(Error::ActionLength {
            expected: task.len(),
            got: actions.len(),
        });
    }
    for (v, st) in task.subtasks().iter().enumerate() {
        let pair = actions.pair(v);
        if !feasible_actions(st, state).contains(pair) {
            return Err(Error::Infeasible {
                index: v,
                offload: pair.offload as u8,
                cache: pair.cache as u8,
            });
        }
    }
    Ok(())
}

pub fn completion_time(state: &EpisodeState, actions: &ActionMatrix) -> Result<f64> {
    validate_actions(state, actions)?;
    Ok(state
        .task
        .subtasks()
        .iter()
        .zip(actions.offload())
        .map(|(st, &of)| subtask_time(st, of, state.is_hit(st), state))
        .sum())
}

/// Episode reward (a cost: lower is better).
pub fn reward(state: &EpisodeState, actions: &ActionMatrix, prices: &PriceVector) -> Result<f64> {
    validate_actions(state, actions)?;
    Ok(state
        .task
        .subtasks()
        .iter()
        .zip(actions.pairs())
        .map(|(st, pair)| subtask_reward(st, pair, state, prices))
        .sum())
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::caching::Eviction;

    fn pairs(set: FeasibleSet) -> Vec<String> {
        set.iter().map(|p| p.to_string()).collect()
    }

    #[test]
    fn pair_order_and_codes() {
        let codes: Vec<u8> = ActionPair::ALL.iter().map(|p| p.code()).collect();
        assert_eq!(codes, vec![0, 1, 2, 3]);
        assert!(ActionPair::ALL.windows(2).all(|w| w[0] < w[1]));
        for c in 0..4 {
            assert_eq!(ActionPair::from_code(c).code(), c);
        }
    }

    #[test]
    fn feasible_sets() {
        let up = SubTask::upload(0, 400_000).unwrap();
        let down = SubTask::download(1, 160_000, 3).unwrap();
        let comp = SubTask::compute(2, 100_000, 160_000, 1e4, 4).unwrap();
        let s = state(vec![up.clone(), down.clone(), comp.clone()], 300.0);
        assert_eq!(pairs(feasible_actions(&up, &s)), ["10", "11"]);
        assert_eq!(pairs(feasible_actions(&down, &s)), ["00", "01"]);
        assert_eq!(pairs(feasible_actions(&comp, &s)), ["00", "01", "10", "11"]);

        // Return of 160 KB at 1.6 Mb/s takes 0.8 s + 0.03 s.
        let short = state(vec![up.clone(), down.clone(), comp.clone()], 0.5);
        assert_eq!(pairs(feasible_actions(&up, &short)), ["10", "11"]);
        assert_eq!(pairs(feasible_actions(&down, &short)), ["01"]);
        assert_eq!(pairs(feasible_actions(&comp, &short)), ["01", "11"]);

        // Equality is not strictly within coverage.
        let edge = state(vec![down.clone()], 0.83);
        assert!((return_time(&down, &edge) - 0.83).abs() < 1e-12);
    }

    #[test]
    fn upload_golden() {
        let up = SubTask::upload(0, 400_000).unwrap();
        let s = state(vec![up.clone()], 300.0);
        let t = subtask_time(&up, true, false, &s);
        let expect = 2.0 + 0.03 + 3.2e6 / 2.4e6 + 0.27;
        assert!((t - 3.6333333333333333).abs() / 3.6333 < 1e-6);
        assert!((t - expect).abs() < 1e-12);
        assert_eq!(subtask_time(&up, true, true, &s), t);
    }

    #[test]
    fn download_golden() {
        let down = SubTask::download(0, 160_000, 3).unwrap();
        let s = state(vec![down.clone()], 300.0);
        assert!((subtask_time(&down, false, true, &s) - 0.83).abs() < 1e-12);
        let miss = 1.28e6 / 2.4e6 + 0.27 + 0.8 + 0.03;
        assert!((subtask_time(&down, false, false, &s) - miss).abs() < 1e-12);
    }

    #[test]
    fn compute_local_golden() {
        let comp = SubTask::compute(0, 100_000, 160_000, 1e4, 3).unwrap();
        let s = state(vec![comp.clone()], 300.0);
        let arrive = 0.8e6 / 1.6e6 + 0.03;
        let back = 0.8 + 0.03;
        let local = subtask_time(&comp, false, false, &s);
        assert!((local - (arrive + 0.1 + back)).abs() < 1e-12);
        let off = subtask_time(&comp, true, false, &s);
        assert!((off - (arrive + 0.8e6 / 2.4e6 + 0.27 + back)).abs() < 1e-12);
        assert!((subtask_time(&comp, true, true, &s) - (arrive + back)).abs() < 1e-12);
    }

    #[test]
    fn completion_time_sums() {
        let up = SubTask::upload(0, 400_000).unwrap();
        let single = state(vec![up.clone()], 300.0);
        let a1 = ActionMatrix::from_pairs(&[ActionPair::new(true, false)]);
        let t1 = completion_time(&single, &a1).unwrap();
        assert_eq!(t1, subtask_time(&up, true, false, &single));

        let up2 = SubTask::upload(1, 400_000).unwrap();
        let double = state(vec![up, up2], 300.0);
        let a2 = ActionMatrix::from_pairs(&[ActionPair::new(true, false); 2]);
        assert_eq!(completion_time(&double, &a2).unwrap(), 2.0 * t1);
    }

    #[test]
    fn infeasible_actions_rejected() {
        let up = SubTask::upload(0, 400_000).unwrap();
        let s = state(vec![up], 300.0);
        let bad = ActionMatrix::from_pairs(&[ActionPair::new(false, false)]);
        assert!(matches!(completion_time(&s, &bad), Err(Error::Infeasible { index: 0, .. })));
        assert!(matches!(
            reward(&s, &bad, &PriceVector::default()),
            Err(Error::Infeasible { .. })
        ));
        let short = ActionMatrix::from_pairs(&[]);
        assert!(matches!(validate_actions(&s, &short), Err(Error::ActionLength { .. })));
    }

    #[test]
    fn reward_price_cases() {
        let comp = SubTask::compute(0, 300_000, 160_000, 5e3, 3).unwrap();
        let down = SubTask::download(1, 160_000, 5).unwrap();
        let s = state(vec![comp, down], 300.0);
        for pairs in [
            [ActionPair::new(false, false), ActionPair::new(false, true)],
            [ActionPair::new(true, true), ActionPair::new(false, false)],
        ] {
            let a = ActionMatrix::from_pairs(&pairs);
            let zero = PriceVector::completion_only(0.0);
            assert_eq!(reward(&s, &a, &zero).unwrap(), 0.0);
            let t = completion_time(&s, &a).unwrap();
            let r = reward(&s, &a, &PriceVector::completion_only(0.7)).unwrap();
            assert!((r - 0.7 * t).abs() < 1e-12);
            let r1 = reward(&s, &a, &PriceVector::completion_only(1.0)).unwrap();
            assert_eq!(r1, t);
        }
    }

    #[test]
    fn hit_skips_processing_charges() {
        let comp = SubTask::compute(0, 300_000, 160_000, 5e3, 3).unwrap();
        let mut s = state(vec![comp.clone()], 300.0);
        let prices = PriceVector::default();
        let miss = subtask_reward(&comp, ActionPair::new(false, false), &s, &prices);
        s.cache.insert(3, Eviction::MostRecent);
        let hit_local = subtask_reward(&comp, ActionPair::new(false, false), &s, &prices);
        let hit_off = subtask_reward(&comp, ActionPair::new(true, false), &s, &prices);
        assert_eq!(hit_local, hit_off);
        assert!(hit_local < miss);
        let repin = subtask_reward(&comp, ActionPair::new(false, true), &s, &prices);
        assert!((repin - hit_local - 1e-6 * 160_000.0).abs() < 1e-12);
    }

    #[test]
    fn miss_reward_monotone_in_workload_and_input() {
        let prices = PriceVector::default();
        let s = state(vec![SubTask::upload(0, 1).unwrap()], 300.0);
        let mut prev = f64::NEG_INFINITY;
        for rho in [1.0, 10.0, 100.0, 1e3, 1e4] {
            let st = SubTask::compute(0, 200_000, 160_000, rho, 3).unwrap();
            let r = subtask_reward(&st, ActionPair::new(false, false), &s, &prices);
            assert!(r >= prev);
            prev = r;
        }
        let mut prev = f64::NEG_INFINITY;
        for d_in in [100_000, 200_000, 300_000, 500_000] {
            let st = SubTask::compute(0, d_in, 160_000, 10.0, 3).unwrap();
            let r = subtask_reward(&st, ActionPair::new(true, false), &s, &prices);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn label_bits_round_trip() {
        let a = ActionMatrix::from_pairs(&[
            ActionPair::new(true, false),
            ActionPair::new(false, true),
            ActionPair::new(true, true),
        ]);
        assert_eq!(a.label_bits(), "101011");
        assert_eq!(a.labels(), vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(ActionMatrix::from_label_bits("101011").unwrap(), a);
        assert!(ActionMatrix::from_label_bits("10101").is_err());
        assert!(ActionMatrix::from_label_bits("10x0").is_err());
    }
}
