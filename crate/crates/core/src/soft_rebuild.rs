//! Soft demapping, posterior-mean symbol rebuilding and the instantaneous
//! data-aided channel estimate.

use crate::phy::{Constellation, Modulation};
use crate::{Error, Grid, GridRole, Result, C64};

/// LLR magnitude limit; `e^{-30}` is indistinguishable from zero.
pub const LLR_MAX: f64 = 30.0;

/// Soft symbols with `η < RELIABILITY_FLOOR · η_α` are excluded from the
/// data-aided estimate.
pub const RELIABILITY_FLOOR: f64 = 0.05;

/// Bit LLRs `λ_l[i,k] = log P(b=1|Z) / P(b=0|Z)`, stored
/// `[symbol][subcarrier][bit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrGrid {
    rows: usize,
    cols: usize,
    bits: usize,
    values: Vec<f64>,
}

impl LlrGrid {
    pub fn new(rows: usize, cols: usize, bits: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols * bits);
        Self { rows, cols, bits, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn at(&self, i: usize, k: usize) -> &[f64] {
        let o = (i * self.cols + k) * self.bits;
        &self.values[o..o + self.bits]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Hard decisions: bit 1 iff `λ > 0`.
    pub fn hard_bits(&self) -> Vec<u8> {
        self.values.iter().map(|&l| u8::from(l > 0.0)).collect()
    }
}

/// Posterior-mean symbols `X̂` with their powers `η = |X̂|²`.
#[derive(Debug, Clone)]
pub struct SoftSymbolGrid {
    pub x_hat: Grid,
    pub eta: Vec<f64>,
    /// Mean of `eta` over the whole grid.
    pub eta_bar: f64,
}

fn log_sum_exp(acc: f64, v: f64) -> f64 {
    if acc == f64::NEG_INFINITY {
        v
    } else if acc > v {
        acc + (v - acc).exp().ln_1p()
    } else {
        v + (acc - v).exp().ln_1p()
    }
}

/// Exact per-bit LLRs of one equalized sample observed with noise variance
/// `sigma2` around the constellation.
pub fn symbol_llrs(z: C64, sigma2: f64, c: &Constellation) -> Vec<f64> {
    let m = c.bits_per_symbol();
    let mut one = vec![f64::NEG_INFINITY; m];
    let mut zero = vec![f64::NEG_INFINITY; m];
    for (j, p) in c.points().iter().enumerate() {
        let metric = -(z - p).norm_sqr() / sigma2;
        for l in 0..m {
            if c.label_bit(j, l) == 1 {
                one[l] = log_sum_exp(one[l], metric);
            } else {
                zero[l] = log_sum_exp(zero[l], metric);
            }
        }
    }
    one.iter()
        .zip(&zero)
        .map(|(a, b)| {
            let v = a - b;
            if v.is_nan() { 0.0 } else { v.clamp(-LLR_MAX, LLR_MAX) }
        })
        .collect()
}

/// Demaps `Z` given the channel estimate it was equalized with.
///
/// The noise seen by bin `(i,k)` is `noise_var[k] / |Ĥ[i,k]|²`, where
/// `noise_var` is the per-subcarrier variance of noise plus interference
/// before equalization. Nulled bins get `λ = 0`.
pub fn demap(
    z: &Grid,
    h_est: &Grid,
    noise_var: &[f64],
    nulled: &[bool],
    c: &Constellation,
) -> Result<LlrGrid> {
    if !z.same_shape(h_est) {
        return Err(Error::LengthMismatch { expected: z.rows() * z.cols(), got: h_est.rows() * h_est.cols() });
    }
    if noise_var.len() != z.cols() {
        return Err(Error::LengthMismatch { expected: z.cols(), got: noise_var.len() });
    }
    let m = c.bits_per_symbol();
    let mut values = Vec::with_capacity(z.rows() * z.cols() * m);
    for i in 0..z.rows() {
        for k in 0..z.cols() {
            let h2 = h_est.get(i, k).norm_sqr();
            let erased = nulled.get(i * z.cols() + k).copied().unwrap_or(false) || h2 == 0.0;
            if erased {
                values.extend(std::iter::repeat_n(0.0, m));
                continue;
            }
            let sigma2 = (noise_var[k] / h2).max(f64::MIN_POSITIVE);
            values.extend(symbol_llrs(z.get(i, k), sigma2, c));
        }
    }
    Ok(LlrGrid::new(z.rows(), z.cols(), m, values))
}

fn prob_one(llr: f64) -> f64 {
    // logistic function, written to stay finite for either sign
    if llr >= 0.0 {
        1.0 / (1.0 + (-llr).exp())
    } else {
        let e = llr.exp();
        e / (1.0 + e)
    }
}

/// Posterior symbol probabilities `P(X = α_j)` from independent bit priors.
pub fn symbol_probabilities(llrs: &[f64], c: &Constellation) -> Vec<f64> {
    let p1: Vec<f64> = llrs.iter().map(|&l| prob_one(l)).collect();
    (0..c.size())
        .map(|j| {
            p1.iter()
                .enumerate()
                .map(|(l, &p)| if c.label_bit(j, l) == 1 { p } else { 1.0 - p })
                .product()
        })
        .collect()
}

/// `X̂ = Σ_j α_j P(X = α_j)` for every bin.
pub fn soft_symbols(llr: &LlrGrid, c: &Constellation) -> SoftSymbolGrid {
    let mut x_hat = Grid::zeros(llr.rows(), llr.cols(), GridRole::TxFreq);
    let mut eta = Vec::with_capacity(llr.rows() * llr.cols());
    for i in 0..llr.rows() {
        for k in 0..llr.cols() {
            let probs = symbol_probabilities(llr.at(i, k), c);
            let x: C64 = c.points().iter().zip(&probs).map(|(a, p)| a * p).sum();
            x_hat.set(i, k, x);
            eta.push(x.norm_sqr());
        }
    }
    let eta_bar = if eta.is_empty() { 0.0 } else { eta.iter().sum::<f64>() / eta.len() as f64 };
    SoftSymbolGrid { x_hat, eta, eta_bar }
}

/// Per-bin instantaneous estimate `H̃₂ = X̂* Y / d` with its error variance.
#[derive(Debug, Clone)]
pub struct InstantEstimate {
    pub values: Grid,
    /// Row-major error variance of each bin (`σ²_{W''}|X̂|²/d²`).
    pub variance: Vec<f64>,
    pub reliable: Vec<bool>,
}

impl InstantEstimate {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }
}

/// Data-aided instantaneous CFR estimate.
///
/// The normalizer `d` is the constellation power `η_α` for QPSK and the
/// soft-symbol power `η_X̂[i,k]` otherwise. Bins whose soft symbol has
/// power below `RELIABILITY_FLOOR · η_α` are set to zero and flagged.
/// `noise_var[k]` is the noise-plus-interference variance per subcarrier.
pub fn instantaneous_estimate(
    soft: &SoftSymbolGrid,
    y: &Grid,
    c: &Constellation,
    noise_var: &[f64],
) -> Result<InstantEstimate> {
    if !soft.x_hat.same_shape(y) {
        return Err(Error::LengthMismatch { expected: y.rows() * y.cols(), got: soft.x_hat.rows() * soft.x_hat.cols() });
    }
    if noise_var.len() != y.cols() {
        return Err(Error::LengthMismatch { expected: y.cols(), got: noise_var.len() });
    }
    let eta_alpha = c.avg_power();
    let floor = RELIABILITY_FLOOR * eta_alpha;
    let mut values = Grid::zeros(y.rows(), y.cols(), GridRole::CfrEstimate);
    let mut variance = vec![0.0; y.rows() * y.cols()];
    let mut reliable = vec![false; y.rows() * y.cols()];
    for i in 0..y.rows() {
        for k in 0..y.cols() {
            let idx = i * y.cols() + k;
            let eta = soft.eta[idx];
            if !(eta >= floor) || eta == 0.0 {
                continue;
            }
            let d = if c.modulation() == Modulation::Qpsk { eta_alpha } else { eta };
            values.set(i, k, soft.x_hat.get(i, k).conj() * y.get(i, k) / d);
            variance[idx] = noise_var[k] * eta / (d * d);
            reliable[idx] = true;
        }
    }
    Ok(InstantEstimate { values, variance, reliable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_normal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn one_bin(z: C64) -> Grid {
        Grid::from_rows(vec![vec![z]], GridRole::Equalized)
    }

    #[test]
    fn concentrated_likelihood_saturates() {
        for m in [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            let c = Constellation::new(m);
            for j in 0..c.size() {
                let l = symbol_llrs(c.points()[j], 1e-6, &c);
                for (b, v) in c.label_bits(j).iter().zip(&l) {
                    assert_eq!(v.abs(), LLR_MAX);
                    assert_eq!(*v > 0.0, *b == 1);
                }
            }
        }
    }

    #[test]
    fn origin_is_ambiguous_for_qpsk() {
        let c = Constellation::new(Modulation::Qpsk);
        let l = symbol_llrs(C64::new(0.0, 0.0), 0.3, &c);
        assert!(l.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn qpsk_llr_closed_form() {
        let c = Constellation::new(Modulation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let z = complex_normal(&mut rng);
            let s2 = 0.05 + rng.random::<f64>();
            let l = symbol_llrs(z, s2, &c);
            // bit 0 selects the real axis, 0 → positive
            let want_i = -2.0 * SQRT_2 * z.re / s2;
            let want_q = -2.0 * SQRT_2 * z.im / s2;
            assert!((l[0] - want_i.clamp(-LLR_MAX, LLR_MAX)).abs() < 1e-9);
            assert!((l[1] - want_q.clamp(-LLR_MAX, LLR_MAX)).abs() < 1e-9);
        }
    }

    #[test]
    fn demap_erases_nulled_bins() {
        let c = Constellation::new(Modulation::Qam16);
        let z = one_bin(C64::new(0.3, 0.9));
        let h = Grid::from_rows(vec![vec![C64::new(1.0, 0.0)]], GridRole::CfrEstimate);
        let l = demap(&z, &h, &[0.1], &[true], &c).unwrap();
        assert!(l.as_slice().iter().all(|&v| v == 0.0));
        let l = demap(&z, &h, &[0.1], &[false], &c).unwrap();
        assert!(l.as_slice().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn soft_symbol_examples() {
        let c = Constellation::new(Modulation::Qpsk);
        let ones = LlrGrid::new(1, 1, 2, vec![LLR_MAX; 2]);
        let s = soft_symbols(&ones, &c);
        assert!((s.x_hat.get(0, 0) - c.points()[3]).norm() < 1e-12);
        let zero = LlrGrid::new(1, 1, 2, vec![0.0; 2]);
        let s = soft_symbols(&zero, &c);
        assert!(s.x_hat.get(0, 0).norm() < 1e-15);
        assert!(s.eta[0] < 1e-30);
        let s = soft_symbols(&LlrGrid::new(1, 1, 2, vec![4.0, -4.0]), &c);
        // E[axis] = (1/√2)·(P(0) − P(1)) = −(1/√2) tanh(λ/2)
        let t = 2f64.tanh() * FRAC_1_SQRT_2;
        assert!((s.x_hat.get(0, 0) - C64::new(-t, t)).norm() < 1e-9);
    }

    #[test]
    fn posteriors_normalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = Constellation::new(Modulation::Qam64);
        for _ in 0..100 {
            let l: Vec<f64> = (0..6).map(|_| rng.random_range(-LLR_MAX..LLR_MAX)).collect();
            let p: f64 = symbol_probabilities(&l, &c).iter().sum();
            assert!((p - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn instantaneous_estimate_perfect_and_guarded() {
        let c = Constellation::new(Modulation::Qam16);
        let x = Grid::from_rows(vec![vec![c.points()[5], C64::new(0.0, 0.0)]], GridRole::TxFreq);
        let h = [C64::new(0.4, -1.1), C64::new(2.0, 0.0)];
        let y = Grid::from_rows(vec![vec![h[0] * x.get(0, 0), C64::new(1.0, 1.0)]], GridRole::RxFreq);
        let soft = SoftSymbolGrid { eta: vec![x.get(0, 0).norm_sqr(), 0.0], eta_bar: 0.0, x_hat: x };
        let est = instantaneous_estimate(&soft, &y, &c, &[0.0, 0.0]).unwrap();
        assert!((est.values.get(0, 0) - h[0]).norm() < 1e-12);
        assert_eq!(est.reliable, vec![true, false]);
        assert_eq!(est.values.get(0, 1), C64::new(0.0, 0.0));
    }

    #[test]
    fn instantaneous_estimate_noise_statistics() {
        let c = Constellation::new(Modulation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 16;
        let var: f64 = 0.2;
        let h: Vec<C64> = (0..n).map(|_| complex_normal(&mut rng)).collect();
        let x: Vec<C64> = (0..n).map(|_| c.points()[rng.random_range(0..4)]).collect();
        let soft = SoftSymbolGrid {
            x_hat: Grid::from_rows(vec![x.clone()], GridRole::TxFreq),
            eta: x.iter().map(|v| v.norm_sqr()).collect(),
            eta_bar: 1.0,
        };
        let runs = 10_000;
        let mut mean = vec![C64::new(0.0, 0.0); n];
        let mut sq = vec![0.0; n];
        let mut predicted = 0.0;
        for _ in 0..runs {
            let y: Vec<C64> = (0..n).map(|k| h[k] * x[k] + complex_normal(&mut rng) * var.sqrt()).collect();
            let est = instantaneous_estimate(&soft, &Grid::from_rows(vec![y], GridRole::RxFreq), &c, &vec![var; n]).unwrap();
            for k in 0..n {
                let e = est.values.get(0, k) - h[k];
                mean[k] += e;
                sq[k] += e.norm_sqr();
            }
            predicted = est.variance[0];
        }
        for k in 0..n {
            assert!((mean[k] / runs as f64).norm() < 0.02);
            assert!((sq[k] / runs as f64 / predicted - 1.0).abs() < 0.05);
        }
        assert!((predicted - var / c.avg_power()).abs() < 1e-12);
    }

    #[test]
    fn hard_decisions_at_high_snr() {
        let c = Constellation::new(Modulation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 2000;
        let var: f64 = 1e-3;
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let z: Vec<C64> = idx.iter().map(|&j| c.points()[j] + complex_normal(&mut rng) * var.sqrt()).collect();
        let zg = Grid::from_rows(vec![z], GridRole::Equalized);
        let hg = Grid::from_rows(vec![vec![C64::new(1.0, 0.0); n]], GridRole::CfrEstimate);
        let llr = demap(&zg, &hg, &vec![var; n], &[], &c).unwrap();
        let soft = soft_symbols(&llr, &c);
        let errors = (0..n).filter(|&k| c.nearest(soft.x_hat.get(0, k)) != idx[k]).count();
        assert!((errors as f64) / (n as f64) < 1e-3);
    }
}
