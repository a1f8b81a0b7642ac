//! Gray-labeled square QAM constellations.
//!
//! Labels are read most significant bit first; the first half of the bits
//! selects the in-phase level and the second half the quadrature level. On
//! each axis the most positive level carries the all-zero Gray word, so for
//! QPSK `00 → (1 + j)/√2`. The full tables live in `data/gray_labels.csv`.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
            Modulation::Qam64 => "qam64",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "qam16" | "16qam" => Ok(Modulation::Qam16),
            "qam64" | "64qam" => Ok(Modulation::Qam64),
            other => Err(Error::Config(format!("unknown constellation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constellation {
    modulation: Modulation,
    /// `points[j]` carries the label whose bits are the binary digits of `j`.
    points: Vec<C64>,
    avg_power: f64,
}

fn inverse_gray(mut g: usize) -> usize {
    let mut v = g;
    while g > 0 {
        g >>= 1;
        v ^= g;
    }
    v
}

/// Integer PAM level (odd, in `−(M−1)..=M−1`) carrying Gray word `label`.
fn pam_level(label: usize, levels: usize) -> i64 {
    levels as i64 - 1 - 2 * inverse_gray(label) as i64
}

impl Constellation {
    /// Unit average power constellation.
    pub fn new(modulation: Modulation) -> Self {
        let half = modulation.bits_per_symbol() / 2;
        let levels = 1usize << half;
        let scale = (2.0 * ((levels * levels) as f64 - 1.0) / 3.0).sqrt().recip();
        let mask = levels - 1;
        let points: Vec<C64> = (0..1usize << (2 * half))
            .map(|j| {
                let i_level = pam_level(j >> half, levels);
                let q_level = pam_level(j & mask, levels);
                C64::new(i_level as f64, q_level as f64) * scale
            })
            .collect();
        let avg_power = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        Self {
            modulation,
            points,
            avg_power,
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    /// Constellation size `μ`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Points indexed by label value.
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Average symbol power `η_α`.
    pub fn avg_power(&self) -> f64 {
        self.avg_power
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Bit `l` (0 = first transmitted) of the label of point `j`.
    pub fn label_bit(&self, j: usize, l: usize) -> u8 {
        ((j >> (self.bits_per_symbol() - 1 - l)) & 1) as u8
    }

    pub fn label_bits(&self, j: usize) -> Vec<u8> {
        (0..self.bits_per_symbol()).map(|l| self.label_bit(j, l)).collect()
    }

    pub fn point_for_bits(&self, bits: &[u8]) -> C64 {
        let j = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.points[j]
    }

    /// Index of the nearest point.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }
}

/// Maps consecutive groups of `log2 μ` bits to constellation points.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<C64>> {
    let m = c.bits_per_symbol();
    if bits.len() % m != 0 {
        return Err(Error::LengthMismatch {
            expected: bits.len().div_ceil(m) * m,
            got: bits.len(),
        });
    }
    Ok(bits.chunks(m).map(|g| c.point_for_bits(g)).collect())
}

/// Minimum-distance decisions, returned as bits.
pub fn demap_hard(symbols: &[C64], c: &Constellation) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|&z| c.label_bits(c.nearest(z)))
        .collect()
}
