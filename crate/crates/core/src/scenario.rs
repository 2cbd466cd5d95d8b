//! Deterministic episode streams.
//!
//! Episode `id` of a scenario is a pure function of `(config, seed, id)`:
//! each episode draws from its own ChaCha stream, so episodes can be
//! generated in any order or in parallel.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::caching::{CacheState, OutputLibrary};
use crate::channel::{db_to_linear, LinkState};
use crate::config::{CacheMode, Config, CoverageMode};
use crate::error::Result;
use crate::evaluator::EpisodeState;
use crate::geometry;
use crate::workload::generate_task_with;

const LIBRARY_SEED_SALT: u64 = 0x6c69_6272_6172_7921;

#[derive(Debug, Clone)]
pub struct Scenario {
    cfg: Config,
    seed: u64,
    library: Arc<OutputLibrary>,
    capacity: u64,
}

impl Scenario {
    pub fn new(cfg: Config, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let library = Arc::new(OutputLibrary::generate(
            seed ^ LIBRARY_SEED_SALT,
            cfg.library_size,
            cfg.workload.size_min_bytes,
            cfg.workload.size_max_bytes,
            cfg.zipf_delta,
        )?);
        let capacity = (library.total_bytes() as f64 * cfg.cache_fraction).floor() as u64;
        Ok(Scenario {
            cfg,
            seed,
            library,
            capacity,
        })
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn library(&self) -> &Arc<OutputLibrary> {
        &self.library
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn empty_cache(&self) -> CacheState {
        CacheState::empty(self.library.clone(), self.capacity)
    }

    pub fn episode(&self, id: u64) -> Result<EpisodeState> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        let cfg = &self.cfg;

        let task = generate_task_with(&mut rng, &cfg.workload, &self.library)?;

        let l = &cfg.link;
        let mut jitter = |base: f64| {
            if l.snr_jitter_db > 0.0 {
                base + rng.gen_range(-l.snr_jitter_db..=l.snr_jitter_db)
            } else {
                base
            }
        };
        let snr_fh = db_to_linear(jitter(l.snr_fh_db));
        let snr_bh = db_to_linear(jitter(l.snr_bh_db));
        let link = LinkState::new(
            l.bandwidth_fh_hz,
            l.bandwidth_bh_hz,
            snr_fh,
            snr_bh,
            l.rain_ratio,
            l.delay_fh_s,
            l.delay_bh_s,
        )?;

        let coverage = match cfg.coverage_mode {
            CoverageMode::Fixed => cfg.coverage_time_s,
            CoverageMode::Geometry => {
                let theta_0 = cfg.orbit.params(0.0).theta_0()?;
                loop {
                    let theta_m = rng.gen_range(0.0..theta_0);
                    let t = geometry::coverage_time(&cfg.orbit.params(theta_m))?;
                    if t > 0.0 {
                        break t;
                    }
                }
            }
        };

        let cache = match cfg.cache_mode {
            CacheMode::Randomized => CacheState::randomized(self.library.clone(), self.capacity, &mut rng),
            CacheMode::Empty => self.empty_cache(),
        };

        EpisodeState::new(task, coverage, link, cfg.cpu_hz, cache)
    }
}
