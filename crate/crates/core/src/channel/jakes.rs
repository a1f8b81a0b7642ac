//! Rayleigh tap processes with the Jakes (U-shaped) Doppler spectrum.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::{Error, Result, C64};

/// Lower bound on the number of bins inside the Doppler band of the
/// spectral generator; below this the discretized spectrum visibly
/// distorts the autocorrelation.
const MIN_DOPPLER_BINS: f64 = 128.0;
const MAX_SPECTRAL_LEN: usize = 1 << 20;

/// How tap processes are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingMethod {
    /// Frequency-domain shaping of white Gaussian noise by the square root
    /// of the Jakes spectrum, then one inverse FFT at the block rate.
    Spectral,
    /// Sum of `count` complex sinusoids with random arrival angles and
    /// Gaussian weights.
    SumOfSinusoids { count: usize },
}

impl Default for FadingMethod {
    fn default() -> Self {
        FadingMethod::Spectral
    }
}

impl FromStr for FadingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spectral" => Ok(FadingMethod::Spectral),
            "sos" | "sum_of_sinusoids" => Ok(FadingMethod::SumOfSinusoids { count: 64 }),
            other => Err(Error::Config(format!("unknown fading method `{other}`"))),
        }
    }
}

/// One draw of a circularly symmetric complex Gaussian with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Unit-power process sampled at `blocks` instants spaced `tb_s` apart.
pub(crate) fn unit_process<R: Rng + ?Sized>(
    method: FadingMethod,
    fd_hz: f64,
    tb_s: f64,
    blocks: usize,
    rng: &mut R,
) -> Vec<C64> {
    let norm_doppler = fd_hz * tb_s;
    if blocks == 0 {
        return Vec::new();
    }
    if norm_doppler <= 0.0 {
        return vec![complex_normal(rng); blocks];
    }
    match method {
        FadingMethod::Spectral => match spectral_len(norm_doppler, blocks) {
            Some(n) => spectral(norm_doppler, n, blocks, rng),
            None => sum_of_sinusoids(norm_doppler, 64, blocks, rng),
        },
        FadingMethod::SumOfSinusoids { count } => {
            sum_of_sinusoids(norm_doppler, count.max(32), blocks, rng)
        }
    }
}

fn spectral_len(norm_doppler: f64, blocks: usize) -> Option<usize> {
    let need = (2 * blocks).max((MIN_DOPPLER_BINS / norm_doppler).ceil() as usize);
    let n = need.checked_next_power_of_two()?;
    // the Doppler band must also fit below Nyquist
    (n <= MAX_SPECTRAL_LEN && norm_doppler < 0.5).then_some(n)
}

/// Square root of the sampled Jakes spectrum on an `n`-point grid whose
/// Doppler edge sits at bin `k_m`. The edge bin integrates the singularity.
fn jakes_filter(n: usize, k_m: usize) -> Vec<f64> {
    let km = k_m as f64;
    let mut f = vec![0.0; n];
    for k in 0..k_m {
        let v = (1.0 / (2.0 * (1.0 - (k as f64 / km).powi(2)).sqrt())).sqrt();
        f[k] = v;
        if k > 0 {
            f[n - k] = v;
        }
    }
    let edge = (km / 2.0 * (FRAC_PI_2 - ((km - 1.0) / (2.0 * km - 1.0).sqrt()).atan())).sqrt();
    f[k_m] = edge;
    f[n - k_m] = edge;
    f
}

fn spectral<R: Rng + ?Sized>(norm_doppler: f64, n: usize, blocks: usize, rng: &mut R) -> Vec<C64> {
    let k_m = ((norm_doppler * n as f64).round() as usize).clamp(1, n / 2 - 1);
    let filter = jakes_filter(n, k_m);
    let energy: f64 = filter.iter().map(|v| v * v).sum();
    let mut buf: Vec<C64> = filter
        .iter()
        .map(|&g| if g > 0.0 { complex_normal(rng) * g } else { C64::new(0.0, 0.0) })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / energy.sqrt();
    buf.truncate(blocks);
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

fn sum_of_sinusoids<R: Rng + ?Sized>(
    norm_doppler: f64,
    count: usize,
    blocks: usize,
    rng: &mut R,
) -> Vec<C64> {
    let paths: Vec<(C64, f64)> = (0..count)
        .map(|_| {
            let angle = rng.random::<f64>() * 2.0 * PI;
            (complex_normal(rng), 2.0 * PI * norm_doppler * angle.cos())
        })
        .collect();
    let scale = 1.0 / (count as f64).sqrt();
    (0..blocks)
        .map(|i| {
            paths
                .iter()
                .map(|(a, w)| a * C64::from_polar(1.0, w * i as f64))
                .sum::<C64>()
                * scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::j0;
    use rand::SeedableRng;

    /// The generator's exact autocorrelation is the normalized inverse DFT
    /// of the squared filter; check it against J0 directly.
    #[test]
    fn filter_autocorrelation_approximates_bessel() {
        let norm_doppler = 0.01;
        let n = spectral_len(norm_doppler, 1000).unwrap();
        let k_m = (norm_doppler * n as f64).round() as usize;
        let f = jakes_filter(n, k_m);
        let energy: f64 = f.iter().map(|v| v * v).sum();
        for p in 0..=20 {
            let r: f64 = f
                .iter()
                .enumerate()
                .map(|(k, v)| v * v * (2.0 * PI * (k * p) as f64 / n as f64).cos())
                .sum::<f64>()
                / energy;
            let target = j0(2.0 * PI * p as f64 * k_m as f64 / n as f64);
            assert!((r - target).abs() < 0.01, "p={p} r={r} j0={target}");
        }
    }

    #[test]
    fn zero_doppler_is_constant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = unit_process(FadingMethod::Spectral, 0.0, 1e-3, 50, &mut rng);
        assert!(x.iter().all(|v| *v == x[0]));
    }

    #[test]
    fn extreme_doppler_falls_back_to_sinusoids() {
        assert!(spectral_len(0.7, 10).is_none());
        assert!(spectral_len(1e-6, 10).is_none());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = unit_process(FadingMethod::Spectral, 1e-6, 1.0, 10, &mut rng);
        assert_eq!(x.len(), 10);
    }
}
