//! PN guard interval: m-sequence generation, cyclic extension and the
//! spectrum used by the least-squares estimator.

use crate::dft::Dft;
use crate::{Error, Result, C64};

/// Default LFSR: order 8, `x^8 + x^6 + x^5 + x + 1`.
pub const DEFAULT_ORDER: u32 = 8;
pub const DEFAULT_POLY: u64 = 0x163;
pub const DEFAULT_SEED: u64 = 0x01;

/// A small table of primitive polynomials (bit `i` = coefficient of `x^i`).
pub fn primitive_poly(order: u32) -> Option<u64> {
    let poly = match order {
        2 => 0x7,
        3 => 0xb,
        4 => 0x13,
        5 => 0x25,
        6 => 0x43,
        7 => 0x83,
        8 => DEFAULT_POLY,
        9 => 0x211,
        10 => 0x409,
        11 => 0x805,
        12 => 0x1053,
        _ => return None,
    };
    Some(poly)
}

/// One period of the maximal-length sequence produced by the recurrence
/// `a[n+m] = Σ_{i<m} p_i a[n+i] (mod 2)` where `p_i` are the bits of `poly`.
///
/// The first `order` outputs are the bits of `seed`, least significant first.
pub fn generate_mseq(order: u32, poly: u64, seed: u64) -> Result<Vec<u8>> {
    if !(2..=32).contains(&order) {
        return Err(Error::InvalidParameter(format!("LFSR order {order} outside 2..=32")));
    }
    let mask = (1u64 << order) - 1;
    if seed & mask == 0 {
        return Err(Error::ZeroSeed);
    }
    if seed & !mask != 0 {
        return Err(Error::InvalidParameter(format!(
            "seed {seed:#x} does not fit in {order} bits"
        )));
    }
    if poly >> order != 1 || poly & 1 == 0 {
        return Err(Error::NotPrimitive { order, poly });
    }
    let feedback = poly & mask;
    let period = mask as usize;
    let mut state = seed;
    let mut out = Vec::with_capacity(period);
    for n in 0..period {
        if n > 0 && state == seed {
            return Err(Error::NotPrimitive { order, poly });
        }
        out.push((state & 1) as u8);
        let new_bit = (state & feedback).count_ones() as u64 & 1;
        state = (state >> 1) | (new_bit << (order - 1));
    }
    if state != seed {
        return Err(Error::NotPrimitive { order, poly });
    }
    Ok(out)
}

/// The guard interval: an `n_pn`-chip m-sequence preceded by a cyclic
/// extension, `nu` samples in total.
#[derive(Debug, Clone)]
pub struct PnSequence {
    n_pn: usize,
    nu: usize,
    amplitude: f64,
    core_offset: usize,
    samples: Vec<C64>,
    spectrum: Vec<C64>,
}

/// Maps bits to `±a` chips (`0 → +a`, `1 → −a`), places the whole `nu − N_PN`
/// extension in front of the core and computes the unitary `N_PN`-point
/// spectrum of the core.
///
/// `power_boost` is the guard power relative to unit-power data.
pub fn build_gi(bits: &[u8], nu: usize, power_boost: f64) -> Result<PnSequence> {
    let n_pn = bits.len();
    if n_pn == 0 || nu < n_pn {
        return Err(Error::GuardTooShort { nu, n_pn });
    }
    if power_boost <= 0.0 || !power_boost.is_finite() {
        return Err(Error::InvalidParameter(format!("power boost {power_boost}")));
    }
    let amplitude = power_boost.sqrt();
    let chips: Vec<C64> = bits
        .iter()
        .map(|&b| C64::new(if b == 0 { amplitude } else { -amplitude }, 0.0))
        .collect();
    let core_offset = nu - n_pn;
    let samples: Vec<C64> = (0..nu)
        .map(|j| chips[(j as isize - core_offset as isize).rem_euclid(n_pn as isize) as usize])
        .collect();
    let spectrum = Dft::new(n_pn).forward(&chips);
    Ok(PnSequence {
        n_pn,
        nu,
        amplitude,
        core_offset,
        samples,
        spectrum,
    })
}

impl PnSequence {
    /// Generates the m-sequence and builds the guard interval in one step.
    pub fn from_lfsr(order: u32, poly: u64, seed: u64, nu: usize, power_boost: f64) -> Result<Self> {
        build_gi(&generate_mseq(order, poly, seed)?, nu, power_boost)
    }

    pub fn n_pn(&self) -> usize {
        self.n_pn
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn core_offset(&self) -> usize {
        self.core_offset
    }

    /// All `nu` guard samples.
    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// The ISI-protected `N_PN` chips at the end of the guard.
    pub fn core(&self) -> &[C64] {
        &self.samples[self.core_offset..]
    }

    pub fn spectrum(&self) -> &[C64] {
        &self.spectrum
    }

    /// Length of the cyclic extension protecting the core.
    pub fn protected_len(&self) -> usize {
        self.core_offset
    }

    /// Whether a channel with `len` taps leaves the core free of data ISI.
    pub fn covers_channel(&self, len: usize) -> bool {
        len <= self.core_offset + 1
    }
}
