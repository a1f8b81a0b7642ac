//! Least-squares channel estimation from the ISI-free PN core, with the
//! analytic error of the estimate and the interference left behind by
//! imperfect PN removal.

use crate::dft::Dft;
use crate::sequences::PnSequence;
use crate::{Error, Result, C64};

/// Where a [`CfrEstimate`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateSource {
    Pn,
    DataAided,
    Combined,
    Genie,
}

/// An `N`-bin CFR estimate with its analytic mean squared error `ε`
/// (average over subcarriers).
///
/// `reliable[k] == false` marks bins that a data-aided refiner could not
/// estimate; the combiner uses the PN-based value there.
#[derive(Debug, Clone, PartialEq)]
pub struct CfrEstimate {
    pub values: Vec<C64>,
    pub eps: f64,
    pub source: EstimateSource,
    pub reliable: Vec<bool>,
}

impl CfrEstimate {
    pub fn new(values: Vec<C64>, eps: f64, source: EstimateSource) -> Self {
        let reliable = vec![true; values.len()];
        Self {
            values,
            eps: eps.max(0.0),
            source,
            reliable,
        }
    }

    pub fn with_reliability(mut self, reliable: Vec<bool>) -> Self {
        assert_eq!(reliable.len(), self.values.len());
        self.reliable = reliable;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// CIR estimate `ĥ[l], l < L` from the received PN core: per-bin LS
/// division on the `N_PN`-point grid followed by an inverse DFT truncated
/// to `L` taps.
pub fn ls_cir(rx_core: &[C64], pn: &PnSequence, len: usize) -> Result<Vec<C64>> {
    let n_pn = pn.n_pn();
    if rx_core.len() != n_pn {
        return Err(Error::LengthMismatch { expected: n_pn, got: rx_core.len() });
    }
    if len == 0 || len > n_pn {
        return Err(Error::InvalidParameter(format!(
            "CIR length {len} must lie in 1..={n_pn}"
        )));
    }
    if let Some(bin) = pn.spectrum().iter().position(|p| p.norm_sqr() == 0.0) {
        return Err(Error::SpectralNull { bin });
    }
    let dft = Dft::new(n_pn);
    let s = dft.forward(rx_core);
    let ratio: Vec<C64> = s.iter().zip(pn.spectrum()).map(|(s, p)| s / p).collect();
    Ok(dft.inverse_raw_truncated(&ratio, len))
}

/// LS estimate extended to the `n_fft`-point grid, with its analytic error.
pub fn ls_pn(
    rx_core: &[C64],
    pn: &PnSequence,
    len: usize,
    noise_var: f64,
    n_fft: usize,
) -> Result<CfrEstimate> {
    let cir = ls_cir(rx_core, pn, len)?;
    let values = crate::channel::cfr(&cir, n_fft)?;
    Ok(CfrEstimate::new(values, analytic_mse_pn(pn, len, noise_var), EstimateSource::Pn))
}

/// `ε = (L σ_w² / N_PN²) Σ_k 1/|P[k]|²` with `P` the unitary spectrum of the
/// core (equivalently `(L σ_w²/N_PN) Σ 1/|P_raw[k]|²` for the raw DFT).
pub fn analytic_mse_pn(pn: &PnSequence, len: usize, noise_var: f64) -> f64 {
    let n_pn = pn.n_pn() as f64;
    let inv: f64 = pn.spectrum().iter().map(|p| 1.0 / p.norm_sqr()).sum();
    len as f64 * noise_var * inv / (n_pn * n_pn)
}

/// Aperiodic autocorrelation `Σ_n c_l[n]* c_l[n+q]`, `q = 0..ν`, of the
/// guard rotated right by `l` samples.
fn shifted_autocorrelation(c: &[C64], l: usize) -> Vec<C64> {
    let nu = c.len();
    let cl: Vec<C64> = (0..nu).map(|n| c[(n + nu - l % nu) % nu]).collect();
    (0..nu)
        .map(|q| (0..nu - q).map(|n| cl[n].conj() * cl[n + q]).sum())
        .collect()
}

fn bracket_spectrum(acf: &[C64], n_fft: usize) -> Vec<f64> {
    let mut arr = vec![C64::new(0.0, 0.0); n_fft];
    arr[0] += acf[0];
    for (q, a) in acf.iter().enumerate().skip(1) {
        arr[q % n_fft] += a;
        arr[(n_fft - q % n_fft) % n_fft] += a.conj();
    }
    Dft::new(n_fft)
        .forward_raw_padded(&arr)
        .iter()
        .map(|v| v.re / n_fft as f64)
        .collect()
}

/// Interference power `σ_I²[k]` on every subcarrier caused by residual PN
/// after removal with tap errors of variance `tap_err_var[l]`.
pub fn interference_profile(pn: &PnSequence, tap_err_var: &[f64], n_fft: usize) -> Vec<f64> {
    let c = pn.samples();
    let nu = c.len();
    let mut acf = vec![C64::new(0.0, 0.0); nu];
    for (l, &v) in tap_err_var.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (a, b) in acf.iter_mut().zip(shifted_autocorrelation(c, l)) {
            *a += b * v;
        }
    }
    if nu == 0 {
        return vec![0.0; n_fft];
    }
    bracket_spectrum(&acf, n_fft)
}

/// Single-bin form of [`interference_profile`].
pub fn interference_power(pn: &PnSequence, tap_err_var: &[f64], k: usize, n_fft: usize) -> f64 {
    interference_profile(pn, tap_err_var, n_fft)[k]
}

/// Interference shape for equal error variance on `L` taps, so that
/// `σ_I²[k] = (ε/L)·kernel[k]` can be evaluated cheaply inside the loop.
#[derive(Debug, Clone)]
pub struct InterferenceKernel {
    len: usize,
    kernel: Vec<f64>,
}

impl InterferenceKernel {
    pub fn new(pn: &PnSequence, len: usize, n_fft: usize) -> Self {
        Self {
            len,
            kernel: interference_profile(pn, &vec![1.0; len], n_fft),
        }
    }

    /// `σ_I²[k]` when the CIR estimate has total error `eps` spread evenly
    /// over its taps.
    pub fn power(&self, eps: f64) -> Vec<f64> {
        let per_tap = eps / self.len.max(1) as f64;
        self.kernel.iter().map(|k| (k * per_tap).max(0.0)).collect()
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
}
