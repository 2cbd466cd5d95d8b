//! Satellite output cache: Zipf popularity over a fixed library of task
//! outputs, the placement vector, and the most-recent / most-popular
//! retention policies used by the baselines.

use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::workload::TaskGraph;

/// Request probability of the output at `rank` under a Zipf profile of
/// skew `delta` over `library_size` outputs.
pub fn request_probability(rank: usize, delta: f64, library_size: usize) -> Result<f64> {
    if rank == 0 || rank > library_size {
        return Err(Error::Domain(format!(
            "rank {rank} outside [1, {library_size}]"
        )));
    }
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("Zipf skew {delta} must be >= 0")));
    }
    let norm: f64 = (1..=library_size).map(|l| (l as f64).powf(-delta)).sum();
    Ok((rank as f64).powf(-delta) / norm)
}

/// The library of cacheable outputs. Rank `r` (1-based) has size
/// `sizes[r - 1]` bytes.
#[derive(Debug, Clone)]
pub struct OutputLibrary {
    sizes: Vec<u64>,
    delta: f64,
    probs: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl OutputLibrary {
    pub fn new(sizes: Vec<u64>, delta: f64) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Config("library must hold at least one output".into()));
        }
        let n = sizes.len();
        let probs = (1..=n)
            .map(|r| request_probability(r, delta, n))
            .collect::<Result<Vec<_>>>()?;
        let sampler = WeightedIndex::new(&probs).map_err(|e| Error::Config(e.to_string()))?;
        Ok(OutputLibrary {
            sizes,
            delta,
            probs,
            sampler,
        })
    }

    /// Library whose output sizes are drawn uniformly from `[min, max]` bytes.
    pub fn generate(seed: u64, len: usize, min_bytes: u64, max_bytes: u64, delta: f64) -> Result<Self> {
        if min_bytes == 0 || min_bytes > max_bytes {
            return Err(Error::Config("library size range must satisfy 0 < min <= max".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = (0..len).map(|_| rng.gen_range(min_bytes..=max_bytes)).collect();
        Self::new(sizes, delta)
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn size(&self, rank: usize) -> u64 {
        self.sizes[rank - 1]
    }

    pub fn total_bytes(&self) -> u64 {
        self.sizes.iter().sum()
    }

    /// Popularity of `rank`; 0 for the no-output sentinel.
    pub fn popularity(&self, rank: usize) -> f64 {
        if rank == 0 {
            0.0
        } else {
            self.probs[rank - 1]
        }
    }

    pub fn sample_rank<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng) + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eviction {
    /// Keep the most recently touched outputs.
    MostRecent,
    /// Keep the outputs with the highest request probability.
    MostPopular,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted { evicted: Vec<usize> },
    /// Already cached; its recency was refreshed.
    Refreshed,
    /// Evicted again immediately because it was the least popular entry.
    NotRetained,
    /// Larger than the whole cache.
    Rejected,
}

#[derive(Debug, Clone)]
pub struct CacheState {
    library: Arc<OutputLibrary>,
    placement: Vec<bool>,
    recency: Vec<u64>,
    clock: u64,
    capacity: u64,
}

impl PartialEq for CacheState {
    fn eq(&self, other: &Self) -> bool {
        self.placement == other.placement
            && self.recency == other.recency
            && self.capacity == other.capacity
            && self.library.sizes == other.library.sizes
    }
}

impl CacheState {
    pub fn empty(library: Arc<OutputLibrary>, capacity: u64) -> Self {
        let n = library.len();
        CacheState {
            library,
            placement: vec![false; n],
            recency: vec![0; n],
            clock: 0,
            capacity,
        }
    }

    /// Random placement: a random number of outputs, visited in random
    /// order, each kept if it still fits.
    pub fn randomized<R: Rng + ?Sized>(library: Arc<OutputLibrary>, capacity: u64, rng: &mut R) -> Self {
        let mut cache = Self::empty(library, capacity);
        let mut ranks: Vec<usize> = (1..=cache.library.len()).collect();
        ranks.shuffle(rng);
        let take = rng.gen_range(0..=ranks.len());
        let mut used = 0;
        for &rank in &ranks[..take] {
            let size = cache.library.size(rank);
            if used + size <= capacity {
                used += size;
                cache.clock += 1;
                cache.placement[rank - 1] = true;
                cache.recency[rank - 1] = cache.clock;
            }
        }
        cache
    }

    pub fn library(&self) -> &Arc<OutputLibrary> {
        &self.library
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn placement(&self) -> &[bool] {
        &self.placement
    }

    pub fn used_bytes(&self) -> u64 {
        self.cached_ranks().map(|r| self.library.size(r)).sum()
    }

    pub fn cached_ranks(&self) -> impl Iterator<Item = usize> + '_ {
        self.placement
            .iter()
            .enumerate()
            .filter(|(_, &k)| k)
            .map(|(i, _)| i + 1)
    }

    /// Whether the output at `rank` is cached. Rank 0 (no output) never hits.
    pub fn is_hit(&self, rank: usize) -> bool {
        rank != 0 && self.placement.get(rank - 1).copied().unwrap_or(false)
    }

    /// Refresh the recency of a cached output.
    pub fn touch(&mut self, rank: usize) {
        if self.is_hit(rank) {
            self.clock += 1;
            self.recency[rank - 1] = self.clock;
        }
    }

    pub fn evict(&mut self, rank: usize) {
        if rank != 0 && rank <= self.placement.len() {
            self.placement[rank - 1] = false;
        }
    }

    /// Placement vector as a string of `0`/`1`, rank 1 first.
    pub fn placement_bits(&self) -> String {
        self.placement.iter().map(|&k| if k { '1' } else { '0' }).collect()
    }

    /// Replace the placement from a bit-string. Recency follows rank order.
    pub fn with_placement_bits(mut self, bits: &str) -> Result<Self> {
        if bits.len() != self.placement.len() {
            return Err(Error::Dimension {
                expected: self.placement.len(),
                got: bits.len(),
            });
        }
        for (i, c) in bits.chars().enumerate() {
            self.placement[i] = match c {
                '0' => false,
                '1' => true,
                _ => return Err(Error::Domain(format!("placement bit {c:?}"))),
            };
            self.recency[i] = 0;
        }
        for rank in 1..=self.placement.len() {
            self.touch(rank);
        }
        if self.used_bytes() > self.capacity {
            return Err(Error::Domain("placement exceeds cache capacity".into()));
        }
        Ok(self)
    }

    pub fn evict_mrc(&self, rank: usize) -> (CacheState, InsertOutcome) {
        let mut next = self.clone();
        let outcome = next.insert(rank, Eviction::MostRecent);
        (next, outcome)
    }

    pub fn evict_mpc(&self, rank: usize) -> (CacheState, InsertOutcome) {
        let mut next = self.clone();
        let outcome = next.insert(rank, Eviction::MostPopular);
        (next, outcome)
    }

    /// Cache the output at `rank`, evicting under `policy` until it fits.
    pub fn insert(&mut self, rank: usize, policy: Eviction) -> InsertOutcome {
        assert!(rank >= 1 && rank <= self.library.len(), "rank {rank} out of range");
        if self.is_hit(rank) {
            self.touch(rank);
            return InsertOutcome::Refreshed;
        }
        let size = self.library.size(rank);
        if size > self.capacity {
            return InsertOutcome::Rejected;
        }
        self.clock += 1;
        self.placement[rank - 1] = true;
        self.recency[rank - 1] = self.clock;
        let mut used = self.used_bytes();
        let mut evicted = Vec::new();
        while used > self.capacity {
            let victim = match policy {
                Eviction::MostRecent => self
                    .cached_ranks()
                    .min_by_key(|&r| self.recency[r - 1])
                    .expect("cache over capacity holds something"),
                Eviction::MostPopular => self
                    .cached_ranks()
                    .min_by(|&a, &b| {
                        // Least popular first; on equal popularity the larger rank goes.
                        self.library
                            .popularity(a)
                            .total_cmp(&self.library.popularity(b))
                            .then(b.cmp(&a))
                    })
                    .expect("cache over capacity holds something"),
            };
            self.placement[victim - 1] = false;
            used -= self.library.size(victim);
            if victim == rank {
                return InsertOutcome::NotRetained;
            }
            evicted.push(victim);
        }
        InsertOutcome::Inserted { evicted }
    }
}

/// Cache the outputs selected by `cache_bits`, in sub-task order.
pub fn apply_caching_action(
    cache: &CacheState,
    task: &TaskGraph,
    cache_bits: &[bool],
    policy: Eviction,
) -> Result<CacheState> {
    if cache_bits.len() != task.len() {
        return Err(Error::ActionLength {
            expected: task.len(),
            got: cache_bits.len(),
        });
    }
    let mut next = cache.clone();
    for (st, &bit) in task.subtasks().iter().zip(cache_bits) {
        if bit && st.d_out() > 0 {
            next.insert(st.out_rank(), policy);
        }
    }
    Ok(next)
}
