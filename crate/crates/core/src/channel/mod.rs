//! WSSUS tapped-delay-line Rayleigh channel with Jakes Doppler, and the
//! closed-form time/frequency correlation functions used by the Wiener
//! refiners.

mod bessel;
mod jakes;
mod profile;

use std::f64::consts::PI;

use rand::Rng;

use crate::dft::Dft;
use crate::{Error, Result, C64};

pub use bessel::j0;
pub use jakes::FadingMethod;
pub use jakes::complex_normal;
pub use profile::{
    preset_profile, sfn_profile, ChannelPreset, PowerDelayProfile, TU6_DELAYS_US, TU6_POWERS_DB,
};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Maximum Doppler shift `v·f_c/c` for a speed in km/h.
pub fn doppler_hz(velocity_kmh: f64, fc_hz: f64) -> f64 {
    velocity_kmh / 3.6 * fc_hz / SPEED_OF_LIGHT
}

/// Block-wise quasi-static taps `h_l^{(i)}`, `num_blocks × L`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    taps: Vec<Vec<C64>>,
    fd_hz: f64,
    tb_s: f64,
}

impl ChannelRealization {
    /// Wraps explicit tap rows (all rows must have the same length).
    pub fn from_taps(taps: Vec<Vec<C64>>, fd_hz: f64, tb_s: f64) -> Self {
        let len = taps.first().map_or(0, Vec::len);
        assert!(taps.iter().all(|r| r.len() == len), "tap rows must share a length");
        Self { taps, fd_hz, tb_s }
    }

    /// The same taps repeated for every block.
    pub fn static_taps(taps: &[C64], num_blocks: usize) -> Self {
        Self::from_taps(vec![taps.to_vec(); num_blocks], 0.0, 0.0)
    }

    pub fn num_blocks(&self) -> usize {
        self.taps.len()
    }

    /// Channel length `L`.
    pub fn len(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn taps(&self, block: usize) -> &[C64] {
        &self.taps[block]
    }

    pub fn fd_hz(&self) -> f64 {
        self.fd_hz
    }

    pub fn tb_s(&self) -> f64 {
        self.tb_s
    }
}

/// Draws a realization whose taps are independent complex Gaussian
/// processes with variance `σ_l²` and time correlation `J0(2π f_d τ)`,
/// sampled once per block.
pub fn realize<R: Rng + ?Sized>(
    profile: &PowerDelayProfile,
    fd_hz: f64,
    tb_s: f64,
    num_blocks: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    realize_with(FadingMethod::Spectral, profile, fd_hz, tb_s, num_blocks, rng)
}

pub fn realize_with<R: Rng + ?Sized>(
    method: FadingMethod,
    profile: &PowerDelayProfile,
    fd_hz: f64,
    tb_s: f64,
    num_blocks: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(fd_hz >= 0.0) || !(tb_s >= 0.0) {
        return Err(Error::InvalidParameter(format!("Doppler {fd_hz} Hz, block time {tb_s} s")));
    }
    let len = profile.len();
    let mut taps = vec![vec![C64::new(0.0, 0.0); len]; num_blocks];
    for (&d, &p) in profile.delays().iter().zip(profile.powers()) {
        let process = jakes::unit_process(method, fd_hz, tb_s, num_blocks, rng);
        let amp = p.sqrt();
        for (row, v) in taps.iter_mut().zip(process) {
            row[d] = v * amp;
        }
    }
    Ok(ChannelRealization { taps, fd_hz, tb_s })
}

/// `H[k] = Σ_l h_l e^{-j2πlk/N}` (no unitary scaling).
pub fn cfr(taps: &[C64], n_fft: usize) -> Result<Vec<C64>> {
    if taps.len() > n_fft {
        return Err(Error::ChannelTooLong { len: taps.len(), n_fft });
    }
    Ok(Dft::new(n_fft).forward_raw_padded(taps))
}

/// Frequency correlation `r_f[q] = Σ_l σ_l² e^{-j2πqτ_l/N}`.
pub fn r_f(q: i64, profile: &PowerDelayProfile, n_fft: usize) -> C64 {
    profile
        .delays()
        .iter()
        .zip(profile.powers())
        .map(|(&d, &p)| {
            let phase = -2.0 * PI * ((q * d as i64).rem_euclid(n_fft as i64)) as f64 / n_fft as f64;
            C64::from_polar(p, phase)
        })
        .sum()
}

/// Time correlation `r_t[p] = J0(2π p f_d T_b)`.
pub fn r_t(p: i64, fd_hz: f64, tb_s: f64) -> f64 {
    j0(2.0 * PI * p as f64 * fd_hz * tb_s)
}

/// Bandwidth over which `|r_f|` stays at or above `level`: the first
/// subcarrier offset where it drops below, times the spacing. Returns
/// `n_fft · spacing` if it never drops.
pub fn coherence_bandwidth(
    profile: &PowerDelayProfile,
    n_fft: usize,
    subcarrier_spacing_hz: f64,
    level: f64,
) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("correlation level {level}")));
    }
    let first_drop = (1..n_fft as i64)
        .find(|&q| r_f(q, profile, n_fft).norm() < level)
        .unwrap_or(n_fft as i64);
    Ok(first_drop as f64 * subcarrier_spacing_hz)
}

/// Rule-of-thumb coherence bandwidth from the RMS delay spread `σ_τ`:
/// `1/(50σ_τ)` at correlation level 0.9 and `1/(5σ_τ)` at 0.5.
pub fn coherence_bandwidth_rms(profile: &PowerDelayProfile, sample_rate: f64, level: f64) -> Result<f64> {
    let factor = if (level - 0.9).abs() < 1e-12 {
        50.0
    } else if (level - 0.5).abs() < 1e-12 {
        5.0
    } else {
        return Err(Error::InvalidParameter(format!(
            "RMS rule defined only for levels 0.9 and 0.5, got {level}"
        )));
    };
    let spread = profile.rms_delay_spread_samples() / sample_rate;
    Ok(if spread > 0.0 { 1.0 / (factor * spread) } else { f64::INFINITY })
}
