//! MMSE combination of the PN-based and data-aided estimates and the
//! iterative receiver loop built around it.

use crate::channel::{cfr, PowerDelayProfile};
use crate::dft::Dft;
use crate::phy::{equalize, ola, remove_pn, Constellation, Equalized, TimeSignal};
use crate::pn_estimator::{analytic_mse_pn, ls_cir, CfrEstimate, EstimateSource, InterferenceKernel};
use crate::refiners::{FreqModel, Refiner};
use crate::sequences::PnSequence;
use crate::soft_rebuild::{demap, instantaneous_estimate, soft_symbols};
use crate::{Error, Grid, GridRole, Result, C64};

/// Weight `β = ε₂/(ε₁+ε₂)` given to the first estimate; `1/2` when both
/// errors vanish.
pub fn combining_weight(eps1: f64, eps2: f64) -> f64 {
    let total = eps1 + eps2;
    if total <= 0.0 {
        0.5
    } else {
        eps2 / total
    }
}

/// `β·h1 + (1−β)·h2`. Bins that `h2` could not estimate take `h1`.
pub fn combine(h1: &CfrEstimate, h2: &CfrEstimate) -> Result<CfrEstimate> {
    if h1.len() != h2.len() {
        return Err(Error::LengthMismatch { expected: h1.len(), got: h2.len() });
    }
    let beta = combining_weight(h1.eps, h2.eps);
    let values = h1
        .values
        .iter()
        .zip(&h2.values)
        .zip(&h2.reliable)
        .map(|((&a, &b), &ok)| if ok { a * beta + b * (1.0 - beta) } else { a })
        .collect();
    let total = h1.eps + h2.eps;
    let mut eps = if total > 0.0 { h1.eps * h2.eps / total } else { 0.0 };
    let fallback = h2.reliable.iter().filter(|&&r| !r).count();
    if fallback > 0 {
        let f = fallback as f64 / h2.len() as f64;
        eps = (1.0 - f) * eps + f * h1.eps;
    }
    Ok(CfrEstimate::new(values, eps, EstimateSource::Combined))
}

/// Copy of `h1` whose `ε` is raised to `mean|h1 − h2|² − ε₂` when that
/// exceeds the analytic value.
///
/// With independent errors `E|h1 − h2|² = ε₁ + ε₂`. The analytic `ε₁` of the
/// PN estimate assumes an interference-free guard core; when echoes reach
/// past the cyclic extension the real error is far larger and the combiner
/// would otherwise keep trusting it.
pub fn with_checked_eps(h1: &CfrEstimate, h2: &CfrEstimate) -> CfrEstimate {
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((a, b), &ok) in h1.values.iter().zip(&h2.values).zip(&h2.reliable) {
        if ok {
            sum += (a - b).norm_sqr();
            count += 1;
        }
    }
    let mut out = h1.clone();
    if count > 0 {
        out.eps = h1.eps.max(sum / count as f64 - h2.eps);
    }
    out
}

/// Fixed receiver parameters shared by every frame of a run.
#[derive(Debug, Clone)]
pub struct ReceiverConfig {
    /// Taps of the PN-based LS estimate (at most `N_PN`).
    pub cir_len: usize,
    /// Taps kept when a CFR estimate is turned back into a CIR for guard
    /// removal (at least `cir_len`, at most `ν`).
    pub removal_len: usize,
    pub noise_var: f64,
    pub iterations: usize,
    /// Raise the first estimate's `ε` to what its distance from the
    /// data-aided estimate implies (see [`with_checked_eps`]).
    pub check_first_eps: bool,
}

/// State of one pass through the loop.
#[derive(Debug, Clone)]
pub struct IterationOutput {
    /// Estimate used for PN removal and equalization in this pass.
    pub estimates: Vec<CfrEstimate>,
    /// Refined data-aided estimate before combining (absent in pass 0).
    pub data_aided: Option<Vec<CfrEstimate>>,
    pub y: Grid,
    pub z: Equalized,
}

impl IterationOutput {
    /// Mean analytic error over the rows.
    pub fn eps(&self) -> f64 {
        mean(self.estimates.iter().map(|e| e.eps))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// The iterative receiver: PN-based LS start, then rounds of soft
/// rebuilding, refinement and MMSE combining.
#[derive(Debug, Clone)]
pub struct Receiver {
    dft: Dft,
    pn: PnSequence,
    constellation: Constellation,
    kernel: InterferenceKernel,
    refiner: Option<Refiner>,
    cfg: ReceiverConfig,
}

impl Receiver {
    /// `refiner = None` gives the PN-only receiver regardless of
    /// `cfg.iterations`.
    pub fn new(
        dft: Dft,
        pn: PnSequence,
        constellation: Constellation,
        refiner: Option<Refiner>,
        cfg: ReceiverConfig,
    ) -> Result<Self> {
        if cfg.cir_len == 0 || cfg.cir_len > pn.n_pn() {
            return Err(Error::InvalidParameter(format!(
                "CIR length {} must lie in 1..={}",
                cfg.cir_len,
                pn.n_pn()
            )));
        }
        if cfg.removal_len < cfg.cir_len || cfg.removal_len > pn.nu() {
            return Err(Error::InvalidParameter(format!(
                "removal length {} must lie in {}..={}",
                cfg.removal_len,
                cfg.cir_len,
                pn.nu()
            )));
        }
        let kernel = InterferenceKernel::new(&pn, cfg.removal_len, dft.len());
        Ok(Self { dft, pn, constellation, kernel, refiner, cfg })
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.cfg
    }

    pub fn pn(&self) -> &PnSequence {
        &self.pn
    }

    pub fn dft(&self) -> &Dft {
        &self.dft
    }

    /// LS estimate of every block from the PN core of the guard in front of it.
    pub fn pn_estimates(&self, rx: &TimeSignal) -> Result<Vec<CfrEstimate>> {
        let eps = analytic_mse_pn(&self.pn, self.cfg.cir_len, self.cfg.noise_var);
        let off = self.pn.core_offset();
        (0..rx.num_blocks())
            .map(|i| {
                let core = &rx.guard(i)[off..off + self.pn.n_pn()];
                let cir = ls_cir(core, &self.pn, self.cfg.cir_len)?;
                Ok(CfrEstimate::new(cfr(&cir, self.dft.len())?, eps, EstimateSource::Pn))
            })
            .collect()
    }

    /// Removes the guard with the CIRs implied by `est`, runs OLA and
    /// equalizes with `est`.
    pub fn equalize_with(&self, rx: &TimeSignal, est: &[CfrEstimate]) -> Result<(Grid, Equalized)> {
        let cirs: Vec<Vec<C64>> = est
            .iter()
            .map(|e| self.dft.inverse_raw_truncated(&e.values, self.cfg.removal_len))
            .collect();
        let cleaned = remove_pn(rx, &self.pn, &cirs)?;
        let y = ola(&self.dft, &cleaned)?;
        let h = Grid::from_rows(est.iter().map(|e| e.values.clone()).collect(), GridRole::CfrEstimate);
        let z = equalize(&y, &h)?;
        Ok((y, z))
    }

    /// Noise plus residual-guard interference per subcarrier for a CIR
    /// estimate with error `eps`.
    pub fn effective_noise(&self, eps: f64) -> Vec<f64> {
        let n = self.dft.len() as f64;
        let boosted = self.cfg.noise_var * (n + self.pn.nu() as f64) / n;
        self.kernel.power(eps).into_iter().map(|s| boosted + s).collect()
    }

    fn measured_profile(est: &[CfrEstimate], dft: &Dft, len: usize) -> Result<PowerDelayProfile> {
        let mut power = vec![0.0; len];
        for e in est {
            for (p, h) in power.iter_mut().zip(dft.inverse_raw_truncated(&e.values, len)) {
                *p += h.norm_sqr();
            }
        }
        let delays: Vec<usize> = (0..len).collect();
        PowerDelayProfile::new(&delays, &power)
    }

    /// Runs the loop from the PN-based estimate. Entry `t` of the result is
    /// pass `t`; entry 0 is the PN-only receiver.
    pub fn iterate(&self, rx: &TimeSignal) -> Result<Vec<IterationOutput>> {
        let pn = self.pn_estimates(rx)?;
        self.iterate_from(rx, pn)
    }

    /// Runs the loop with `initial` as the fixed first estimate of the
    /// combiner.
    pub fn iterate_from(&self, rx: &TimeSignal, initial: Vec<CfrEstimate>) -> Result<Vec<IterationOutput>> {
        if initial.len() != rx.num_blocks() {
            return Err(Error::LengthMismatch { expected: rx.num_blocks(), got: initial.len() });
        }
        let (y, z) = self.equalize_with(rx, &initial)?;
        let mut out = vec![IterationOutput { estimates: initial.clone(), data_aided: None, y, z }];
        let Some(refiner) = &self.refiner else {
            return Ok(out);
        };
        let measured = if refiner.config().freq_model == FreqModel::Measured {
            Some(Self::measured_profile(&initial, &self.dft, self.cfg.removal_len)?)
        } else {
            None
        };
        for _ in 0..self.cfg.iterations {
            let prev = out.last().unwrap();
            let noise = self.effective_noise(prev.eps());
            let h = Grid::from_rows(
                prev.estimates.iter().map(|e| e.values.clone()).collect(),
                GridRole::CfrEstimate,
            );
            let llr = demap(&prev.z.z, &h, &noise, &prev.z.nulled, &self.constellation)?;
            let soft = soft_symbols(&llr, &self.constellation);
            let inst = instantaneous_estimate(&soft, &prev.y, &self.constellation, &noise)?;
            let h2 = refiner.refine(&inst, measured.as_ref())?;
            let combined = initial
                .iter()
                .zip(&h2)
                .map(|(a, b)| {
                    if self.cfg.check_first_eps {
                        combine(&with_checked_eps(a, b), b)
                    } else {
                        combine(a, b)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let (y, z) = self.equalize_with(rx, &combined)?;
            out.push(IterationOutput { estimates: combined, data_aided: Some(h2), y, z });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_normal, ChannelRealization};
    use crate::phy::{assemble, map_bits, propagate, Modulation};
    use crate::refiners::{RefinerConfig, RefinerKind};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn est(v: Vec<C64>, eps: f64) -> CfrEstimate {
        CfrEstimate::new(v, eps, EstimateSource::Pn)
    }

    #[test]
    fn weight_examples() {
        assert_eq!(combining_weight(0.01, 0.01), 0.5);
        assert_eq!(combining_weight(0.02, 0.0), 0.0);
        assert_eq!(combining_weight(0.0, 0.0), 0.5);
        assert!((combining_weight(0.02, 0.01) - 1.0 / 3.0).abs() < 1e-15);
        let a = est(vec![C64::new(1.0, 0.0); 4], 0.02);
        let b = est(vec![C64::new(4.0, 0.0); 4], 0.01);
        let c = combine(&a, &b).unwrap();
        assert!((c.eps - 1.0 / 150.0).abs() < 1e-15);
        assert!((c.values[0].re - 3.0).abs() < 1e-12);
        let exact = combine(&a, &est(vec![C64::new(4.0, 0.0); 4], 0.0)).unwrap();
        assert_eq!(exact.values[0], C64::new(4.0, 0.0));
    }

    #[test]
    fn checked_eps_only_raises() {
        let a = est(vec![C64::new(1.0, 0.0); 4], 0.01);
        let near = est(vec![C64::new(1.05, 0.0); 4], 0.001);
        assert_eq!(with_checked_eps(&a, &near).eps, 0.01);
        let far = est(vec![C64::new(1.5, 0.0); 4], 0.01);
        assert!((with_checked_eps(&a, &far).eps - 0.24).abs() < 1e-12);
    }

    #[test]
    fn unreliable_bins_keep_the_first_estimate() {
        let a = est(vec![C64::new(1.0, 0.0); 4], 0.01);
        let b = est(vec![C64::new(3.0, 0.0); 4], 0.01).with_reliability(vec![true, false, true, true]);
        let c = combine(&a, &b).unwrap();
        assert_eq!(c.values[1], C64::new(1.0, 0.0));
        assert_eq!(c.values[0], C64::new(2.0, 0.0));
    }

    proptest! {
        #[test]
        fn weight_minimizes_the_quadratic(e1 in 1e-6f64..1.0, e2 in 1e-6f64..1.0) {
            let f = |b: f64| b * b * e1 + (1.0 - b) * (1.0 - b) * e2;
            let best = (0..=1000).map(|i| i as f64 / 1000.0)
                .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap()).unwrap();
            prop_assert!((combining_weight(e1, e2) - best).abs() <= 1e-3);
            let eps = e1 * e2 / (e1 + e2);
            prop_assert!(eps <= e1.min(e2));
            prop_assert!((f(combining_weight(e1, e2)) - eps).abs() < 1e-12);
        }
    }

    struct Setup {
        rx: TimeSignal,
        truth: Vec<Vec<C64>>,
        receiver: Receiver,
    }

    fn setup(noise_var: f64, iterations: usize, seed: u64, check_first_eps: bool) -> Setup {
        let (n, nu, rows) = (128, 32, 6);
        let dft = Dft::new(n);
        let pn = PnSequence::from_lfsr(4, 0x13, 1, nu, 1.0).unwrap();
        let c = Constellation::new(Modulation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..rows * n * 2).map(|_| rng.random_range(0..2)).collect();
        let x = Grid::from_rows(
            map_bits(&bits, &c).unwrap().chunks(n).map(|r| r.to_vec()).collect(),
            GridRole::TxFreq,
        );
        let taps: Vec<C64> = (0..4).map(|_| complex_normal(&mut rng) * 0.5).collect();
        let ch = ChannelRealization::static_taps(&taps, rows);
        let rx = propagate(&assemble(&dft, &x, &pn).unwrap(), &ch, noise_var, &mut rng).unwrap();
        let truth = vec![cfr(&taps, n).unwrap(); rows];
        let rcfg = RefinerConfig {
            kind: RefinerKind::Wiener1d,
            m: 5,
            m_t: 2,
            m_f: 5,
            block_len: None,
            wiener_len: 8,
            freq_model: FreqModel::Uniform,
        };
        let refiner = Refiner::new(rcfg, n, rows, 0.0, 1e-3).unwrap();
        let receiver = Receiver::new(
            dft,
            pn,
            c,
            Some(refiner),
            ReceiverConfig { cir_len: 8, removal_len: 8, noise_var, iterations, check_first_eps },
        )
        .unwrap();
        Setup { rx, truth, receiver }
    }

    fn mse(est: &[CfrEstimate], truth: &[Vec<C64>]) -> f64 {
        let mut s = 0.0;
        let mut n = 0;
        for (e, t) in est.iter().zip(truth) {
            for (a, b) in e.values.iter().zip(t) {
                s += (a - b).norm_sqr();
                n += 1;
            }
        }
        s / n as f64
    }

    #[test]
    fn zero_iterations_is_the_pn_receiver() {
        let s = setup(0.01, 0, 1, true);
        let out = s.receiver.iterate(&s.rx).unwrap();
        assert_eq!(out.len(), 1);
        let pn = s.receiver.pn_estimates(&s.rx).unwrap();
        assert_eq!(out[0].estimates, pn);
    }

    #[test]
    fn perfect_start_is_a_fixed_point() {
        // the measured check would charge the refiner's interpolation bias to the exact start
        let s = setup(0.0, 2, 2, false);
        let init: Vec<CfrEstimate> = s.truth.iter().map(|t| est(t.clone(), 0.0)).collect();
        let out = s.receiver.iterate_from(&s.rx, init).unwrap();
        for pass in &out {
            assert!(mse(&pass.estimates, &s.truth) < 1e-20);
        }
    }

    #[test]
    fn data_aided_passes_improve_the_pn_estimate() {
        let mut better = 0;
        for seed in 0..10 {
            let s = setup(0.01, 2, 10 + seed, true);
            let out = s.receiver.iterate(&s.rx).unwrap();
            let m: Vec<f64> = out.iter().map(|p| mse(&p.estimates, &s.truth)).collect();
            if m[2] <= m[1] * 1.15 && m[1] < m[0] {
                better += 1;
            }
        }
        assert!(better >= 9, "{better}");
    }
}
