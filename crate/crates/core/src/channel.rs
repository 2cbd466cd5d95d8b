//! Fronthaul (vehicle to satellite) and backhaul (satellite to ground) links.
//!
//! Each link is described by a bandwidth and a single linear SNR that folds
//! transmit power, channel gain and noise together; the rain attenuation
//! ratio scales the Shannon rate. Sizes are bytes, rates are bit/s.

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Achievable rate `lambda * bandwidth * log2(1 + snr)` in bit/s.
pub fn link_rate(lambda: f64, bandwidth_hz: f64, snr: f64) -> f64 {
    lambda * bandwidth_hz * (1.0 + snr).log2()
}

/// Seconds needed to push `bytes` through a link of `rate` bit/s.
pub fn transmit_time(bytes: f64, rate: f64) -> Result<f64> {
    if bytes == 0.0 {
        return Ok(0.0);
    }
    if !(rate > 0.0) {
        return Err(Error::LinkUnusable { bytes });
    }
    Ok(8.0 * bytes / rate)
}

/// Snapshot of both links for one episode. Rates are derived on
/// construction and cannot drift from the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    bandwidth_fh_hz: f64,
    bandwidth_bh_hz: f64,
    snr_fh: f64,
    snr_bh: f64,
    rain_ratio: f64,
    delay_fh_s: f64,
    delay_bh_s: f64,
    rate_fh: f64,
    rate_bh: f64,
}

impl LinkState {
    pub fn new(
        bandwidth_fh_hz: f64,
        bandwidth_bh_hz: f64,
        snr_fh: f64,
        snr_bh: f64,
        rain_ratio: f64,
        delay_fh_s: f64,
        delay_bh_s: f64,
    ) -> Result<Self> {
        if !(bandwidth_fh_hz > 0.0 && bandwidth_bh_hz > 0.0) {
            return Err(Error::Domain("bandwidths must be positive".into()));
        }
        if !(snr_fh >= 0.0 && snr_bh >= 0.0) {
            return Err(Error::Domain("SNR must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&rain_ratio) {
            return Err(Error::Domain(format!(
                "rain attenuation ratio {rain_ratio} outside [0, 1]"
            )));
        }
        if !(delay_fh_s >= 0.0 && delay_bh_s >= 0.0) {
            return Err(Error::Domain("delays must be non-negative".into()));
        }
        Ok(LinkState {
            bandwidth_fh_hz,
            bandwidth_bh_hz,
            snr_fh,
            snr_bh,
            rain_ratio,
            delay_fh_s,
            delay_bh_s,
            rate_fh: link_rate(rain_ratio, bandwidth_fh_hz, snr_fh),
            rate_bh: link_rate(rain_ratio, bandwidth_bh_hz, snr_bh),
        })
    }

    pub fn bandwidth_fh_hz(&self) -> f64 {
        self.bandwidth_fh_hz
    }
    pub fn bandwidth_bh_hz(&self) -> f64 {
        self.bandwidth_bh_hz
    }
    pub fn snr_fh(&self) -> f64 {
        self.snr_fh
    }
    pub fn snr_bh(&self) -> f64 {
        self.snr_bh
    }
    pub fn rain_ratio(&self) -> f64 {
        self.rain_ratio
    }
    /// Vehicle to satellite propagation delay.
    pub fn delay_fh_s(&self) -> f64 {
        self.delay_fh_s
    }
    /// Satellite to ground relay delay.
    pub fn delay_bh_s(&self) -> f64 {
        self.delay_bh_s
    }
    pub fn rate_fh(&self) -> f64 {
        self.rate_fh
    }
    pub fn rate_bh(&self) -> f64 {
        self.rate_bh
    }

    /// Vehicle to satellite transfer time (no propagation delay).
    pub fn uplink_time(&self, bytes: f64) -> f64 {
        raw_time(bytes, self.rate_fh)
    }

    /// Satellite to ground transfer time.
    pub fn backhaul_time(&self, bytes: f64) -> f64 {
        raw_time(bytes, self.rate_bh)
    }

    /// Satellite to vehicle return time. The return link is taken to run at
    /// the fronthaul rate.
    pub fn downlink_time(&self, bytes: f64) -> f64 {
        raw_time(bytes, self.rate_fh)
    }
}

// Infinite rather than an error: a dead link makes every candidate action
// equally bad, which the comparison code handles without special cases.
fn raw_time(bytes: f64, rate: f64) -> f64 {
    if bytes == 0.0 {
        0.0
    } else {
        8.0 * bytes / rate
    }
}
