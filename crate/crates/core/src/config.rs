//! Run configuration: a flat `key = value` file with `#` comments.
//!
//! Every key has a default; defaults follow the reference network
//! parameters (2/3 MHz links, rain ratio 0.8, 30-output library, Zipf
//! skew 1, 10^10 cycles/s, 30/270 ms delays, 5 min coverage, six
//! sub-tasks of 100 to 500 KB, 3 hidden layers, learning rate 0.001).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluator::PriceVector;
use crate::geometry::{self, OrbitParams};
use crate::workload::WorkloadConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    /// Every episode gets the configured coverage time.
    Fixed,
    /// Coverage time derived from a random closest-approach angle.
    Geometry,
}

/// Cache placement an episode is generated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheMode {
    /// Independently randomized placement per episode.
    Randomized,
    Empty,
}

/// Which cache each scheme decides against during a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareCache {
    /// Each scheme starts empty and carries its own cache from one episode
    /// to the next.
    Persistent,
    /// Every scheme sees the placement the episode was generated with.
    Episode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub bandwidth_fh_hz: f64,
    pub bandwidth_bh_hz: f64,
    pub snr_fh_db: f64,
    pub snr_bh_db: f64,
    /// Per-episode uniform SNR jitter, +/- dB.
    pub snr_jitter_db: f64,
    pub rain_ratio: f64,
    pub delay_fh_s: f64,
    pub delay_bh_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitConfig {
    pub earth_radius_km: f64,
    pub altitude_km: f64,
    pub min_elevation_deg: f64,
    pub inclination_deg: f64,
    pub earth_rotation_rad_s: f64,
    /// 0 selects the circular-orbit (Kepler) rate for the altitude.
    pub sat_angular_velocity_rad_s: f64,
}

impl OrbitConfig {
    pub fn params(&self, theta_m: f64) -> OrbitParams {
        let eta_m = if self.sat_angular_velocity_rad_s > 0.0 {
            self.sat_angular_velocity_rad_s
        } else {
            geometry::kepler_angular_velocity(self.earth_radius_km, self.altitude_km)
        };
        OrbitParams {
            altitude_km: self.altitude_km,
            earth_radius_km: self.earth_radius_km,
            min_elevation: self.min_elevation_deg.to_radians(),
            sat_angular_velocity: eta_m,
            earth_angular_velocity: self.earth_rotation_rad_s,
            inclination: self.inclination_deg.to_radians(),
            theta_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub link: LinkConfig,
    pub workload: WorkloadConfig,
    pub library_size: usize,
    pub zipf_delta: f64,
    /// Cache capacity as a fraction of the total library bytes.
    pub cache_fraction: f64,
    pub cache_mode: CacheMode,
    pub compare_cache: CompareCache,
    pub cpu_hz: f64,
    pub coverage_time_s: f64,
    pub coverage_mode: CoverageMode,
    pub orbit: OrbitConfig,
    pub prices: PriceVector,
    pub model: ModelConfig,
    pub dataset_size: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub compare_episodes: usize,
    pub search_limit: u64,
    /// Accepted for completeness; the imitation pipeline does not discount.
    pub discount_factor: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            link: LinkConfig {
                bandwidth_fh_hz: 2e6,
                bandwidth_bh_hz: 3e6,
                snr_fh_db: 30.0,
                snr_bh_db: 30.0,
                snr_jitter_db: 3.0,
                rain_ratio: 0.8,
                delay_fh_s: 0.03,
                delay_bh_s: 0.27,
            },
            workload: WorkloadConfig::default(),
            library_size: 30,
            zipf_delta: 1.0,
            cache_fraction: 0.3,
            cache_mode: CacheMode::Randomized,
            compare_cache: CompareCache::Persistent,
            cpu_hz: 1e10,
            coverage_time_s: 300.0,
            coverage_mode: CoverageMode::Fixed,
            orbit: OrbitConfig {
                earth_radius_km: geometry::EARTH_RADIUS_KM,
                altitude_km: 780.0,
                min_elevation_deg: 10.0,
                inclination_deg: 86.4,
                earth_rotation_rad_s: geometry::EARTH_ROTATION_RAD_S,
                sat_angular_velocity_rad_s: 0.0,
            },
            prices: PriceVector::default(),
            model: ModelConfig {
                hidden_layers: 3,
                hidden_width: 128,
                learning_rate: 0.001,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
                batch_size: 64,
                epochs: 100,
                patience: 10,
            },
            dataset_size: 50_000,
            train_fraction: 0.8,
            val_fraction: 0.1,
            compare_episodes: 2000,
            search_limit: 1_000_000,
            discount_factor: 0.95,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

fn kb_to_bytes(kb: f64) -> u64 {
    (kb * 1000.0).round() as u64
}

impl Config {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Defaults overridden by the `key = value` lines of `text`.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                reason: format!("expected key = value, found {line:?}"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "B_vs_hz" => self.link.bandwidth_fh_hz = parse(key, v)?,
            "B_sg_hz" => self.link.bandwidth_bh_hz = parse(key, v)?,
            "snr_fh_db" => self.link.snr_fh_db = parse(key, v)?,
            "snr_bh_db" => self.link.snr_bh_db = parse(key, v)?,
            "snr_jitter_db" => self.link.snr_jitter_db = parse(key, v)?,
            "lambda" => self.link.rain_ratio = parse(key, v)?,
            "d_vs_s" => self.link.delay_fh_s = parse(key, v)?,
            "d_sg_s" => self.link.delay_bh_s = parse(key, v)?,
            "subtasks" => self.workload.subtasks = parse(key, v)?,
            "size_min_kb" => self.workload.size_min_bytes = kb_to_bytes(parse(key, v)?),
            "size_max_kb" => self.workload.size_max_bytes = kb_to_bytes(parse(key, v)?),
            "rho_min" => self.workload.rho_min = parse(key, v)?,
            "rho_max" => self.workload.rho_max = parse(key, v)?,
            "mix_upload" => self.workload.mix[0] = parse(key, v)?,
            "mix_download" => self.workload.mix[1] = parse(key, v)?,
            "mix_compute" => self.workload.mix[2] = parse(key, v)?,
            "library_size" => self.library_size = parse(key, v)?,
            "zipf_delta" => self.zipf_delta = parse(key, v)?,
            "cache_fraction" => self.cache_fraction = parse(key, v)?,
            "cache_mode" => {
                self.cache_mode = match v {
                    "randomized" => CacheMode::Randomized,
                    "empty" => CacheMode::Empty,
                    _ => return Err(Error::Config(format!("cache_mode {v:?}"))),
                }
            }
            "compare_cache" => {
                self.compare_cache = match v {
                    "persistent" => CompareCache::Persistent,
                    "episode" => CompareCache::Episode,
                    _ => return Err(Error::Config(format!("compare_cache {v:?}"))),
                }
            }
            "f_m_hz" => self.cpu_hz = parse(key, v)?,
            "t_c_s" => self.coverage_time_s = parse(key, v)?,
            "t_c_mode" => {
                self.coverage_mode = match v {
                    "fixed" => CoverageMode::Fixed,
                    "geometry" => CoverageMode::Geometry,
                    _ => return Err(Error::Config(format!("t_c_mode {v:?}"))),
                }
            }
            "earth_radius_km" => self.orbit.earth_radius_km = parse(key, v)?,
            "altitude_km" => self.orbit.altitude_km = parse(key, v)?,
            "min_elevation_deg" => self.orbit.min_elevation_deg = parse(key, v)?,
            "inclination_deg" => self.orbit.inclination_deg = parse(key, v)?,
            "earth_rotation_rad_s" => self.orbit.earth_rotation_rad_s = parse(key, v)?,
            "sat_angular_velocity_rad_s" => self.orbit.sat_angular_velocity_rad_s = parse(key, v)?,
            "price_comp" => self.prices.compute = parse(key, v)?,
            "price_comm" => self.prices.communication = parse(key, v)?,
            "price_cache" => self.prices.cache = parse(key, v)?,
            "price_cpl" => self.prices.completion = parse(key, v)?,
            "hidden_layers" => self.model.hidden_layers = parse(key, v)?,
            "hidden_width" => self.model.hidden_width = parse(key, v)?,
            "learning_rate" => self.model.learning_rate = parse(key, v)?,
            "beta1" => self.model.beta1 = parse(key, v)?,
            "beta2" => self.model.beta2 = parse(key, v)?,
            "epsilon" => self.model.epsilon = parse(key, v)?,
            "batch_size" => self.model.batch_size = parse(key, v)?,
            "epochs" => self.model.epochs = parse(key, v)?,
            "patience" => self.model.patience = parse(key, v)?,
            "dataset_size" => self.dataset_size = parse(key, v)?,
            "train_fraction" => self.train_fraction = parse(key, v)?,
            "val_fraction" => self.val_fraction = parse(key, v)?,
            "compare_episodes" => self.compare_episodes = parse(key, v)?,
            "search_limit" => self.search_limit = parse(key, v)?,
            "discount_factor" => self.discount_factor = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Canonical `key = value` listing of every setting.
    pub fn to_text(&self) -> String {
        let l = &self.link;
        let w = &self.workload;
        let o = &self.orbit;
        let m = &self.model;
        let cache_mode = match self.cache_mode {
            CacheMode::Randomized => "randomized",
            CacheMode::Empty => "empty",
        };
        let compare_cache = match self.compare_cache {
            CompareCache::Persistent => "persistent",
            CompareCache::Episode => "episode",
        };
        let t_c_mode = match self.coverage_mode {
            CoverageMode::Fixed => "fixed",
            CoverageMode::Geometry => "geometry",
        };
        let entries: Vec<(&str, String)> = vec![
            ("B_vs_hz", l.bandwidth_fh_hz.to_string()),
            ("B_sg_hz", l.bandwidth_bh_hz.to_string()),
            ("snr_fh_db", l.snr_fh_db.to_string()),
            ("snr_bh_db", l.snr_bh_db.to_string()),
            ("snr_jitter_db", l.snr_jitter_db.to_string()),
            ("lambda", l.rain_ratio.to_string()),
            ("d_vs_s", l.delay_fh_s.to_string()),
            ("d_sg_s", l.delay_bh_s.to_string()),
            ("subtasks", w.subtasks.to_string()),
            ("size_min_kb", (w.size_min_bytes as f64 / 1000.0).to_string()),
            ("size_max_kb", (w.size_max_bytes as f64 / 1000.0).to_string()),
            ("rho_min", w.rho_min.to_string()),
            ("rho_max", w.rho_max.to_string()),
            ("mix_upload", w.mix[0].to_string()),
            ("mix_download", w.mix[1].to_string()),
            ("mix_compute", w.mix[2].to_string()),
            ("library_size", self.library_size.to_string()),
            ("zipf_delta", self.zipf_delta.to_string()),
            ("cache_fraction", self.cache_fraction.to_string()),
            ("cache_mode", cache_mode.to_string()),
            ("compare_cache", compare_cache.to_string()),
            ("f_m_hz", self.cpu_hz.to_string()),
            ("t_c_s", self.coverage_time_s.to_string()),
            ("t_c_mode", t_c_mode.to_string()),
            ("earth_radius_km", o.earth_radius_km.to_string()),
            ("altitude_km", o.altitude_km.to_string()),
            ("min_elevation_deg", o.min_elevation_deg.to_string()),
            ("inclination_deg", o.inclination_deg.to_string()),
            ("earth_rotation_rad_s", o.earth_rotation_rad_s.to_string()),
            ("sat_angular_velocity_rad_s", o.sat_angular_velocity_rad_s.to_string()),
            ("price_comp", self.prices.compute.to_string()),
            ("price_comm", self.prices.communication.to_string()),
            ("price_cache", self.prices.cache.to_string()),
            ("price_cpl", self.prices.completion.to_string()),
            ("hidden_layers", m.hidden_layers.to_string()),
            ("hidden_width", m.hidden_width.to_string()),
            ("learning_rate", m.learning_rate.to_string()),
            ("beta1", m.beta1.to_string()),
            ("beta2", m.beta2.to_string()),
            ("epsilon", m.epsilon.to_string()),
            ("batch_size", m.batch_size.to_string()),
            ("epochs", m.epochs.to_string()),
            ("patience", m.patience.to_string()),
            ("dataset_size", self.dataset_size.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("val_fraction", self.val_fraction.to_string()),
            ("compare_episodes", self.compare_episodes.to_string()),
            ("search_limit", self.search_limit.to_string()),
            ("discount_factor", self.discount_factor.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Short digest identifying the scenario a dataset was generated from.
    pub fn hash(&self, seed: u64) -> String {
        let mut h = Sha256::new();
        h.update(self.to_text().as_bytes());
        h.update(format!("seed = {seed}\n").as_bytes());
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let l = &self.link;
        if !(l.bandwidth_fh_hz > 0.0 && l.bandwidth_bh_hz > 0.0) {
            return bad("bandwidths must be positive".into());
        }
        if !(l.rain_ratio > 0.0 && l.rain_ratio <= 1.0) {
            return bad(format!("lambda {} must be in (0, 1]", l.rain_ratio));
        }
        if !(l.snr_jitter_db >= 0.0) || !(l.delay_fh_s >= 0.0) || !(l.delay_bh_s >= 0.0) {
            return bad("jitter and delays must be non-negative".into());
        }
        self.workload.validate()?;
        if self.library_size == 0 {
            return bad("library_size must be positive".into());
        }
        if !(self.zipf_delta >= 0.0) {
            return bad("zipf_delta must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.cache_fraction) {
            return bad("cache_fraction must be in [0, 1]".into());
        }
        if !(self.cpu_hz > 0.0) || !(self.coverage_time_s > 0.0) {
            return bad("f_m_hz and t_c_s must be positive".into());
        }
        self.prices.validate()?;
        let m = &self.model;
        if m.hidden_width == 0 || m.batch_size == 0 || m.epochs == 0 {
            return bad("hidden_width, batch_size and epochs must be positive".into());
        }
        if !(m.learning_rate > 0.0) || !(0.0..1.0).contains(&m.beta1) || !(0.0..1.0).contains(&m.beta2) {
            return bad("learning_rate > 0 and betas in [0, 1) required".into());
        }
        let f = self.train_fraction + self.val_fraction;
        if !(self.train_fraction > 0.0 && self.val_fraction >= 0.0 && f < 1.0) {
            return bad("train_fraction + val_fraction must leave a test split".into());
        }
        if self.dataset_size == 0 {
            return bad("dataset_size must be positive".into());
        }
        if self.coverage_mode == CoverageMode::Geometry {
            let p = self.orbit.params(0.0);
            p.theta_0()?;
            p.eta()?;
        }
        Ok(())
    }

    /// Largest coverage time an episode can see.
    pub fn max_coverage_time_s(&self) -> Result<f64> {
        match self.coverage_mode {
            CoverageMode::Fixed => Ok(self.coverage_time_s),
            CoverageMode::Geometry => geometry::coverage_time(&self.orbit.params(0.0)),
        }
    }
}
