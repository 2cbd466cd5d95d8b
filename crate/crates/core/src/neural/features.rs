//! State encoding for the policy network.
//!
//! Layout v1, per sub-task in chain order (8 values):
//! `zeta, d_in, d_out, rho, is_upload, is_download, hit, popularity`,
//! followed by 6 global values:
//! `t_c, r_fh, r_bh, d_vs, d_sg, f_m`.
//! Every value is min-max scaled to `[0, 1]`; out-of-range values are
//! clamped and counted.

use crate::channel::{db_to_linear, link_rate};
use crate::config::Config;
use crate::error::Result;
use crate::evaluator::EpisodeState;
use crate::workload::Category;

pub const FEATURE_LAYOUT_VERSION: u32 = 1;
pub const PER_SUBTASK_FEATURES: usize = 8;
pub const GLOBAL_FEATURES: usize = 6;

pub fn input_dim(subtasks: usize) -> usize {
    PER_SUBTASK_FEATURES * subtasks + GLOBAL_FEATURES
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    /// Scaled value and whether it had to be clamped. A degenerate range
    /// maps everything to 0.
    pub fn scale(&self, v: f64) -> (f64, bool) {
        let clamped = v < self.min || v > self.max;
        let v = v.clamp(self.min, self.max.max(self.min));
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min), clamped)
        } else {
            (0.0, clamped)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeTable {
    pub zeta: Range,
    pub d_in: Range,
    pub d_out: Range,
    pub rho: Range,
    pub popularity: Range,
    pub coverage: Range,
    pub rate_fh: Range,
    pub rate_bh: Range,
    pub delay_fh: Range,
    pub delay_bh: Range,
    pub cpu: Range,
}

impl RangeTable {
    /// Ranges implied by the scenario configuration.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let w = &cfg.workload;
        let l = &cfg.link;
        let size_max = w.size_max_bytes as f64;
        let rate = |bw: f64, db: f64| link_rate(l.rain_ratio, bw, db_to_linear(db));
        Ok(RangeTable {
            zeta: Range::new(0.0, w.rho_max * size_max),
            d_in: Range::new(0.0, size_max),
            d_out: Range::new(0.0, size_max),
            rho: Range::new(0.0, w.rho_max),
            popularity: Range::new(0.0, 1.0),
            coverage: Range::new(0.0, cfg.max_coverage_time_s()?),
            rate_fh: Range::new(
                rate(l.bandwidth_fh_hz, l.snr_fh_db - l.snr_jitter_db),
                rate(l.bandwidth_fh_hz, l.snr_fh_db + l.snr_jitter_db),
            ),
            rate_bh: Range::new(
                rate(l.bandwidth_bh_hz, l.snr_bh_db - l.snr_jitter_db),
                rate(l.bandwidth_bh_hz, l.snr_bh_db + l.snr_jitter_db),
            ),
            delay_fh: Range::new(0.0, l.delay_fh_s),
            delay_bh: Range::new(0.0, l.delay_bh_s),
            cpu: Range::new(0.0, cfg.cpu_hz),
        })
    }
}

/// Feature vector of `state` and the number of clamped values.
pub fn encode_state(state: &EpisodeState, norm: &RangeTable) -> (Vec<f64>, usize) {
    let mut out = Vec::with_capacity(input_dim(state.task.len()));
    let mut clamped = 0;
    let mut push = |range: &Range, v: f64| {
        let (x, c) = range.scale(v);
        clamped += c as usize;
        out.push(x);
    };
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let unit = Range::new(0.0, 1.0);
    for st in state.task.subtasks() {
        push(&norm.zeta, st.zeta());
        push(&norm.d_in, st.d_in() as f64);
        push(&norm.d_out, st.d_out() as f64);
        push(&norm.rho, st.rho());
        push(&unit, flag(st.category() == Category::Upload));
        push(&unit, flag(st.category() == Category::Download));
        push(&unit, flag(state.is_hit(st)));
        push(&norm.popularity, state.cache.library().popularity(st.out_rank()));
    }
    push(&norm.coverage, state.coverage_time_s);
    push(&norm.rate_fh, state.link.rate_fh());
    push(&norm.rate_bh, state.link.rate_bh());
    push(&norm.delay_fh, state.link.delay_fh_s());
    push(&norm.delay_bh, state.link.delay_bh_s());
    push(&norm.cpu, state.cpu_hz);
    (out, clamped)
}
