//! Unitary DFT of arbitrary (including non power-of-two) length.
//!
//! Forward: `X[k] = N^{-1/2} Σ x[n] e^{-j2πnk/N}`, inverse with `+j`. Both
//! directions carry the `N^{-1/2}` factor, so Parseval holds exactly. The
//! mixed-radix work is delegated to `rustfft`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

#[derive(Clone)]
pub struct Dft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("len", &self.len).finish()
    }
}

impl Dft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DFT length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn inverse_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn forward(&self, input: &[C64]) -> Vec<C64> {
        let mut buf = input.to_vec();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn inverse(&self, input: &[C64]) -> Vec<C64> {
        let mut buf = input.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }

    /// Non-normalized transform of a zero-padded short vector:
    /// `Σ_l x[l] e^{-j2πlk/N}` for every `k < N`.
    pub fn forward_raw_padded(&self, taps: &[C64]) -> Vec<C64> {
        assert!(taps.len() <= self.len);
        let mut buf = vec![C64::new(0.0, 0.0); self.len];
        buf[..taps.len()].copy_from_slice(taps);
        self.forward.process(&mut buf);
        buf
    }

    /// `(1/N) Σ_k X[k] e^{+j2πkl/N}` for `l < keep`.
    pub fn inverse_raw_truncated(&self, spectrum: &[C64], keep: usize) -> Vec<C64> {
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let norm = 1.0 / self.len as f64;
        buf.truncate(keep.min(self.len));
        buf.iter_mut().for_each(|v| *v *= norm);
        buf
    }
}
