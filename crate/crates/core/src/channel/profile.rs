use std::collections::BTreeMap;
use std::str::FromStr;

use crate::{Error, Result};

/// Tap delays (µs) and powers (dB) of the COST207 typical urban 6-path model.
pub const TU6_DELAYS_US: [f64; 6] = [0.0, 0.2, 0.5, 1.6, 2.3, 5.0];
pub const TU6_POWERS_DB: [f64; 6] = [-3.0, 0.0, -2.0, -6.0, -8.0, -10.0];

/// Sample-spaced power delay profile normalized to unit total power.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    delays: Vec<usize>,
    powers: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelPreset {
    Tu6,
    Flat,
    TwoTap,
}

impl FromStr for ChannelPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tu6" | "tu-6" => Ok(ChannelPreset::Tu6),
            "flat" => Ok(ChannelPreset::Flat),
            "two_tap" | "two-tap" => Ok(ChannelPreset::TwoTap),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl ChannelPreset {
    pub fn name(self) -> &'static str {
        match self {
            ChannelPreset::Tu6 => "tu6",
            ChannelPreset::Flat => "flat",
            ChannelPreset::TwoTap => "two_tap",
        }
    }
}

impl PowerDelayProfile {
    /// Builds a profile from sample delays and linear powers. Colliding
    /// delays are merged by adding their powers; the result is normalized.
    pub fn new(delays: &[usize], powers: &[f64]) -> Result<Self> {
        if delays.len() != powers.len() || delays.is_empty() {
            return Err(Error::InvalidParameter(
                "delay and power lists must be nonempty and of equal length".into(),
            ));
        }
        if powers.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("tap powers must be finite and ≥ 0".into()));
        }
        let mut merged = BTreeMap::new();
        for (&d, &p) in delays.iter().zip(powers) {
            *merged.entry(d).or_insert(0.0) += p;
        }
        let total: f64 = merged.values().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("profile has zero total power".into()));
        }
        let (delays, powers) = merged.into_iter().map(|(d, p)| (d, p / total)).unzip();
        Ok(Self { delays, powers })
    }

    /// Quantizes continuous delays to the nearest sample.
    pub fn from_continuous(delays_s: &[f64], powers_db: &[f64], sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!("sample rate {sample_rate}")));
        }
        if delays_s.iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::InvalidParameter("delays must be ≥ 0".into()));
        }
        let delays: Vec<usize> = delays_s.iter().map(|d| (d * sample_rate).round() as usize).collect();
        let powers: Vec<f64> = powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        Self::new(&delays, &powers)
    }

    /// Uniform power over delays `0..len`.
    pub fn uniform(len: usize) -> Result<Self> {
        let delays: Vec<usize> = (0..len).collect();
        Self::new(&delays, &vec![1.0; len])
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Channel length `L` (largest delay + 1).
    pub fn len(&self) -> usize {
        self.delays.last().map_or(0, |d| d + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Per-sample power vector of length [`len`](Self::len).
    pub fn dense_powers(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (&d, &p) in self.delays.iter().zip(&self.powers) {
            out[d] = p;
        }
        out
    }

    /// RMS delay spread in samples.
    pub fn rms_delay_spread_samples(&self) -> f64 {
        let mean: f64 = self.delays.iter().zip(&self.powers).map(|(&d, &p)| d as f64 * p).sum();
        let second: f64 = self
            .delays
            .iter()
            .zip(&self.powers)
            .map(|(&d, &p)| (d as f64).powi(2) * p)
            .sum();
        (second - mean * mean).max(0.0).sqrt()
    }
}

/// Named preset profiles. `two_tap` places two equal taps 1 µs apart (at
/// least one sample).
pub fn preset_profile(preset: ChannelPreset, sample_rate: f64) -> Result<PowerDelayProfile> {
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidParameter(format!("sample rate {sample_rate}")));
    }
    match preset {
        ChannelPreset::Flat => PowerDelayProfile::new(&[0], &[1.0]),
        ChannelPreset::TwoTap => {
            let d = ((1e-6 * sample_rate).round() as usize).max(1);
            PowerDelayProfile::new(&[0, d], &[1.0, 1.0])
        }
        ChannelPreset::Tu6 => {
            let delays: Vec<f64> = TU6_DELAYS_US.iter().map(|d| d * 1e-6).collect();
            PowerDelayProfile::from_continuous(&delays, &TU6_POWERS_DB, sample_rate)
        }
    }
}

/// Two-transmitter single frequency network: `base` plus a copy delayed by
/// `extra_delay_s` and attenuated by `attenuation_db`.
pub fn sfn_profile(
    base: &PowerDelayProfile,
    extra_delay_s: f64,
    attenuation_db: f64,
    sample_rate: f64,
) -> Result<PowerDelayProfile> {
    if !(extra_delay_s >= 0.0) {
        return Err(Error::InvalidParameter(format!("SFN delay {extra_delay_s}")));
    }
    let shift = (extra_delay_s * sample_rate).round() as usize;
    let gain = 10f64.powf(-attenuation_db / 10.0);
    let delays: Vec<usize> = base
        .delays()
        .iter()
        .copied()
        .chain(base.delays().iter().map(|d| d + shift))
        .collect();
    let powers: Vec<f64> = base
        .powers()
        .iter()
        .copied()
        .chain(base.powers().iter().map(|p| p * gain))
        .collect();
    PowerDelayProfile::new(&delays, &powers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_two_tap() {
        let flat = preset_profile(ChannelPreset::Flat, 1e6).unwrap();
        assert_eq!(flat.delays(), &[0]);
        assert_eq!(flat.powers(), &[1.0]);
        let two = preset_profile(ChannelPreset::TwoTap, 1e6).unwrap();
        assert_eq!(two.powers(), &[0.5, 0.5]);
    }

    #[test]
    fn tu6_at_dtmb_rate_spans_38_samples() {
        let p = preset_profile(ChannelPreset::Tu6, 7.56e6).unwrap();
        assert_eq!(p.len() - 1, 38);
        assert_eq!(p.delays(), &[0, 2, 4, 12, 17, 38]);
        assert!((p.powers().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tu6_at_desk_rate_merges_collisions() {
        let p = preset_profile(ChannelPreset::Tu6, 1.024e6).unwrap();
        assert_eq!(p.delays(), &[0, 1, 2, 5]);
        assert!((p.powers().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.delays().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sfn_geometry_and_power_split() {
        let fs = 7.56e6;
        let base = preset_profile(ChannelPreset::Tu6, fs).unwrap();
        let sfn = sfn_profile(&base, 23.33e-6, 10.0, fs).unwrap();
        assert_eq!(sfn.len() - 1, 176 + 38);
        let second: f64 = sfn
            .delays()
            .iter()
            .zip(sfn.powers())
            .filter(|(&d, _)| d >= 176)
            .map(|(_, p)| p)
            .sum();
        assert!((second - 0.1 / 1.1).abs() < 1e-12);
    }

    #[test]
    fn sfn_zero_delay_merges_back_to_base() {
        let base = preset_profile(ChannelPreset::Tu6, 7.56e6).unwrap();
        let sfn = sfn_profile(&base, 0.0, 0.0, 7.56e6).unwrap();
        assert_eq!(sfn.delays(), base.delays());
        for (a, b) in sfn.powers().iter().zip(base.powers()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_preset_name() {
        assert!(matches!("rural".parse::<ChannelPreset>(), Err(Error::UnknownPreset(_))));
    }
}
