use rand::Rng;

use crate::channel::{complex_normal, ChannelRealization};
use crate::dft::Dft;
use crate::sequences::PnSequence;
use crate::{Error, Grid, GridRole, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Unitary inverse DFT of one frequency-domain row.
pub fn ofdm_modulate(dft: &Dft, x_row: &[C64]) -> Vec<C64> {
    dft.inverse(x_row)
}

/// Unitary forward DFT of one time-domain data block.
pub fn ofdm_demodulate(dft: &Dft, block: &[C64]) -> Vec<C64> {
    dft.forward(block)
}

/// A stream of `ν + N` sample blocks (guard then data) followed by one
/// trailing guard of `ν` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    nu: usize,
    n: usize,
    blocks: Vec<Vec<C64>>,
    trailer: Vec<C64>,
}

impl TimeSignal {
    pub fn new(nu: usize, n: usize, blocks: Vec<Vec<C64>>, trailer: Vec<C64>) -> Result<Self> {
        if let Some(bad) = blocks.iter().find(|b| b.len() != nu + n) {
            return Err(Error::LengthMismatch { expected: nu + n, got: bad.len() });
        }
        if trailer.len() != nu {
            return Err(Error::LengthMismatch { expected: nu, got: trailer.len() });
        }
        Ok(Self { nu, n, blocks, trailer })
    }

    pub fn from_stream(nu: usize, n: usize, stream: &[C64]) -> Result<Self> {
        let b = nu + n;
        if stream.len() < nu || (stream.len() - nu) % b != 0 {
            return Err(Error::LengthMismatch { expected: nu, got: stream.len() });
        }
        let count = (stream.len() - nu) / b;
        let blocks = stream[..count * b].chunks(b).map(<[C64]>::to_vec).collect();
        Self::new(nu, n, blocks, stream[count * b..].to_vec())
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn fft_size(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &[C64] {
        &self.blocks[i]
    }

    pub fn guard(&self, i: usize) -> &[C64] {
        &self.blocks[i][..self.nu]
    }

    pub fn data(&self, i: usize) -> &[C64] {
        &self.blocks[i][self.nu..]
    }

    pub fn trailer(&self) -> &[C64] {
        &self.trailer
    }

    /// Concatenated samples, trailer included.
    pub fn stream(&self) -> Vec<C64> {
        let mut out: Vec<C64> = self.blocks.iter().flatten().copied().collect();
        out.extend_from_slice(&self.trailer);
        out
    }
}

/// Prepends the guard to every modulated row and appends a trailing guard.
pub fn assemble(dft: &Dft, x: &Grid, gi: &PnSequence) -> Result<TimeSignal> {
    if x.cols() != dft.len() {
        return Err(Error::LengthMismatch { expected: dft.len(), got: x.cols() });
    }
    let blocks = x
        .iter_rows()
        .map(|row| {
            let mut b = gi.samples().to_vec();
            b.extend(ofdm_modulate(dft, row));
            b
        })
        .collect();
    TimeSignal::new(gi.nu(), dft.len(), blocks, gi.samples().to_vec())
}

/// Streaming linear convolution with block-wise switching taps plus AWGN.
///
/// Output samples of block `i` (guard and data) use the taps of block `i`;
/// the trailer uses the following block if the realization has one and the
/// last block otherwise. The tail beyond the trailer is dropped.
pub fn propagate<R: Rng + ?Sized>(
    sig: &TimeSignal,
    ch: &ChannelRealization,
    noise_var: f64,
    rng: &mut R,
) -> Result<TimeSignal> {
    let nb = sig.num_blocks();
    if ch.num_blocks() < nb.max(1) {
        return Err(Error::LengthMismatch { expected: nb.max(1), got: ch.num_blocks() });
    }
    let stream = sig.stream();
    let span = sig.nu + sig.n;
    let mut out = vec![ZERO; stream.len()];
    for (t, y) in out.iter_mut().enumerate() {
        let block = (t / span).min(ch.num_blocks() - 1);
        let taps = ch.taps(block);
        let mut acc = ZERO;
        for (l, h) in taps.iter().enumerate().take(t + 1) {
            if *h != ZERO {
                acc += h * stream[t - l];
            }
        }
        *y = acc;
    }
    if noise_var > 0.0 {
        let sd = noise_var.sqrt();
        out.iter_mut().for_each(|y| *y += complex_normal(rng) * sd);
    }
    TimeSignal::from_stream(sig.nu, sig.n, &out)
}

/// Linear convolution of the guard with `cir`, covering `[−ν, L−1)`
/// relative to the start of the data block.
fn distorted_guard(gi: &PnSequence, cir: &[C64]) -> Vec<C64> {
    let c = gi.samples();
    let len = c.len() + cir.len().saturating_sub(1);
    (0..len)
        .map(|m| {
            cir.iter()
                .enumerate()
                .filter(|&(l, _)| l <= m && m - l < c.len())
                .map(|(l, h)| h * c[m - l])
                .sum()
        })
        .collect()
}

/// Subtracts the estimated channel-distorted guard from every guard region
/// and the `L − 1` samples it spills into the following data block.
///
/// `cir_est[i]` is used for the guard in front of block `i`; the trailer
/// uses the last entry.
pub fn remove_pn(rx: &TimeSignal, gi: &PnSequence, cir_est: &[Vec<C64>]) -> Result<TimeSignal> {
    if cir_est.len() != rx.num_blocks() || cir_est.is_empty() {
        return Err(Error::LengthMismatch { expected: rx.num_blocks(), got: cir_est.len() });
    }
    if gi.nu() != rx.nu {
        return Err(Error::LengthMismatch { expected: rx.nu, got: gi.nu() });
    }
    if let Some(long) = cir_est.iter().find(|h| h.len() > rx.nu.max(1)) {
        return Err(Error::InvalidParameter(format!(
            "CIR estimate of {} taps exceeds the {}-sample guard",
            long.len(),
            rx.nu
        )));
    }
    let mut out = rx.clone();
    for (i, cir) in cir_est.iter().enumerate() {
        let est = distorted_guard(gi, cir);
        for (s, e) in out.blocks[i].iter_mut().zip(&est) {
            *s -= e;
        }
    }
    let last = distorted_guard(gi, cir_est.last().unwrap());
    for (s, e) in out.trailer.iter_mut().zip(&last) {
        *s -= e;
    }
    Ok(out)
}

/// Overlap-and-add: adds the following guard region onto the head of each
/// data block, then takes the unitary DFT.
pub fn ola(dft: &Dft, cleaned: &TimeSignal) -> Result<Grid> {
    if dft.len() != cleaned.n {
        return Err(Error::LengthMismatch { expected: cleaned.n, got: dft.len() });
    }
    if cleaned.nu > cleaned.n {
        return Err(Error::InvalidParameter(format!(
            "guard of {} samples longer than the {}-point block",
            cleaned.nu, cleaned.n
        )));
    }
    let nb = cleaned.num_blocks();
    let rows = (0..nb)
        .map(|i| {
            let next = if i + 1 < nb { cleaned.guard(i + 1) } else { cleaned.trailer() };
            let mut y = cleaned.data(i).to_vec();
            y.iter_mut().zip(next).for_each(|(a, b)| *a += b);
            ofdm_demodulate(dft, &y)
        })
        .collect();
    Ok(Grid::from_rows(rows, GridRole::RxFreq))
}

/// One-tap equalizer output with the bins that were nulled by the guard.
#[derive(Debug, Clone)]
pub struct Equalized {
    pub z: Grid,
    /// Row-major flags, `true` where the estimate was too small to divide by.
    pub nulled: Vec<bool>,
}

/// `Z = Y / Ĥ`, setting `Z = 0` where `|Ĥ|² < 1e−12 · mean|Ĥ|²` (row mean).
pub fn equalize(y: &Grid, h_est: &Grid) -> Result<Equalized> {
    if !y.same_shape(h_est) {
        return Err(Error::LengthMismatch {
            expected: y.rows() * y.cols(),
            got: h_est.rows() * h_est.cols(),
        });
    }
    let mut z = Grid::zeros(y.rows(), y.cols(), GridRole::Equalized);
    let mut nulled = vec![false; y.rows() * y.cols()];
    for i in 0..y.rows() {
        let h = h_est.row(i);
        let mean = h.iter().map(|v| v.norm_sqr()).sum::<f64>() / h.len().max(1) as f64;
        let floor = 1e-12 * mean;
        for (k, (&yk, &hk)) in y.row(i).iter().zip(h).enumerate() {
            if hk.norm_sqr() <= floor || hk == ZERO {
                nulled[i * y.cols() + k] = true;
            } else {
                z.set(i, k, yk / hk);
            }
        }
    }
    Ok(Equalized { z, nulled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{cfr, ChannelRealization};
    use crate::sequences::build_gi;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n).map(|_| complex_normal(rng)).collect()
    }

    fn small_gi(nu: usize) -> PnSequence {
        build_gi(&[0, 1, 1], nu, 2.0).unwrap()
    }

    #[test]
    fn modulation_examples() {
        let n = 16;
        let dft = Dft::new(n);
        let x = ofdm_modulate(&dft, &vec![C64::new(1.0, 0.0); n]);
        assert!((x[0] - C64::new(4.0, 0.0)).norm() < 1e-12);
        assert!(x[1..].iter().all(|v| v.norm() < 1e-12));
        let mut e = vec![ZERO; n];
        e[3] = C64::new(1.0, 0.0);
        let x = ofdm_modulate(&dft, &e);
        assert!(x.iter().all(|v| (v.norm() - 0.25).abs() < 1e-12));
    }

    #[test]
    fn guard_power_is_boosted() {
        let dft = Dft::new(64);
        let gi = build_gi(&crate::sequences::generate_mseq(4, 0x13, 1).unwrap(), 16, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = crate::phy::Constellation::new(crate::phy::Modulation::Qpsk);
        let rows: Vec<Vec<C64>> = (0..200)
            .map(|_| (0..64).map(|_| c.points()[rng.random_range(0..4)]).collect())
            .collect();
        let sig = assemble(&dft, &Grid::from_rows(rows, GridRole::TxFreq), &gi).unwrap();
        assert_eq!(sig.num_blocks(), 200);
        let pg: f64 = (0..200).flat_map(|i| sig.guard(i)).map(|v| v.norm_sqr()).sum::<f64>() / (200.0 * 16.0);
        let pd: f64 = (0..200).flat_map(|i| sig.data(i)).map(|v| v.norm_sqr()).sum::<f64>() / (200.0 * 64.0);
        assert!((pg / pd - 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_guard_passthrough() {
        let dft = Dft::new(8);
        let gi = build_gi(&[], 0, 1.0);
        assert!(gi.is_err());
        let x = Grid::from_rows(vec![vec![C64::new(1.0, 0.0); 8]; 2], GridRole::TxFreq);
        let blocks: Vec<Vec<C64>> = x.iter_rows().map(|r| ofdm_modulate(&dft, r)).collect();
        let sig = TimeSignal::new(0, 8, blocks.clone(), vec![]).unwrap();
        let y = ola(&dft, &sig).unwrap();
        for i in 0..2 {
            for k in 0..8 {
                assert!((y.get(i, k) - 1.0).norm() < 1e-12);
            }
        }
    }

    /// Direct per-sample convolution of one block with the four regimes of
    /// the received guard/data structure written out separately.
    #[test]
    fn piecewise_received_block_structure() {
        let (n, nu, l_len) = (8usize, 4usize, 3usize);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let gi = small_gi(nu);
        let c = gi.samples().to_vec();
        let x_prev = rand_vec(&mut rng, n);
        let x_cur = rand_vec(&mut rng, n);
        let h = rand_vec(&mut rng, l_len);
        let mut stream = c.clone();
        stream.extend(&x_prev);
        stream.extend(&c);
        stream.extend(&x_cur);
        stream.extend(&c);
        let sig = TimeSignal::from_stream(nu, n, &stream).unwrap();
        let ch = ChannelRealization::static_taps(&h, 3);
        let rx = propagate(&sig, &ch, 0.0, &mut rng).unwrap();
        let r = rx.block(1);
        // r[n] for n in [−ν, N) sits at r[n + ν]
        let cc = |m: i64| c[(m + nu as i64) as usize];
        for nn in -(nu as i64)..n as i64 {
            let mut want = ZERO;
            if nn < -(nu as i64) + l_len as i64 - 1 {
                for l in 0..=(nn + nu as i64) as usize {
                    want += h[l] * cc(nn - l as i64);
                }
                for l in (nn + nu as i64 + 1) as usize..l_len {
                    // previous block sample physically preceding the guard
                    want += h[l] * x_prev[(n as i64 + nn + nu as i64 - l as i64) as usize];
                }
            } else if nn < 0 {
                for l in 0..l_len {
                    want += h[l] * cc(nn - l as i64);
                }
            } else if nn < l_len as i64 - 1 {
                for l in 0..=nn as usize {
                    want += h[l] * x_cur[nn as usize - l];
                }
                for l in (nn + 1) as usize..l_len {
                    want += h[l] * cc(nn - l as i64);
                }
            } else {
                for l in 0..l_len {
                    want += h[l] * x_cur[nn as usize - l];
                }
            }
            let got = r[(nn + nu as i64) as usize];
            assert!((got - want).norm() < 1e-12, "n={nn}");
        }
    }

    #[test]
    fn propagate_matches_direct_convolution() {
        let (n, nu) = (8, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let stream = rand_vec(&mut rng, n + 2 * nu);
        let sig = TimeSignal::from_stream(nu, n, &stream).unwrap();
        let h = rand_vec(&mut rng, 3);
        let rx = propagate(&sig, &ChannelRealization::static_taps(&h, 2), 0.0, &mut rng).unwrap();
        let out = rx.stream();
        for t in 0..stream.len() {
            let mut want = ZERO;
            for l in 0..3 {
                if t >= l {
                    want += h[l] * stream[t - l];
                }
            }
            assert!((out[t] - want).norm() < 1e-12);
        }
        let flat = propagate(&sig, &ChannelRealization::static_taps(&[C64::new(1.0, 0.0)], 1), 0.0, &mut rng).unwrap();
        assert_eq!(flat, sig);
    }

    #[test]
    fn exact_pn_removal_and_residual() {
        let (n, nu) = (16, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gi = build_gi(&crate::sequences::generate_mseq(2, 0x7, 1).unwrap(), nu, 2.0).unwrap();
        let h = rand_vec(&mut rng, 4);
        let sig = TimeSignal::new(nu, n, vec![{
            let mut b = gi.samples().to_vec();
            b.extend(vec![ZERO; n]);
            b
        }], gi.samples().to_vec())
        .unwrap();
        let rx = propagate(&sig, &ChannelRealization::static_taps(&h, 1), 0.0, &mut rng).unwrap();
        let clean = remove_pn(&rx, &gi, &[h.clone()]).unwrap();
        let energy: f64 = rx.stream().iter().map(|v| v.norm_sqr()).sum();
        let left: f64 = clean.stream().iter().map(|v| v.norm_sqr()).sum();
        assert!(left <= 1e-20 * energy);

        let untouched = remove_pn(&rx, &gi, &[vec![ZERO; 4]]).unwrap();
        assert_eq!(untouched, rx);

        let h_hat: Vec<C64> = h.iter().map(|v| v * 0.9).collect();
        let res = remove_pn(&rx, &gi, &[h_hat.clone()]).unwrap();
        let c = gi.samples();
        for m in 3..nu {
            let want: C64 = (0..4).map(|l| (h[l] - h_hat[l]) * c[m - l]).sum();
            assert!((res.guard(0)[m] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn ola_makes_convolution_circular() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &n in &[16usize, 64, 256] {
            let nu = n / 4;
            let dft = Dft::new(n);
            let gi = build_gi(&crate::sequences::generate_mseq(2, 0x7, 1).unwrap(), nu, 2.0).unwrap();
            for trial in 0..10 {
                let l_len = 1 + trial % nu;
                let h = rand_vec(&mut rng, l_len);
                let x = Grid::from_rows((0..3).map(|_| rand_vec(&mut rng, n)).collect(), GridRole::TxFreq);
                let sig = assemble(&dft, &x, &gi).unwrap();
                let rx = propagate(&sig, &ChannelRealization::static_taps(&h, 3), 0.0, &mut rng).unwrap();
                let clean = remove_pn(&rx, &gi, &vec![h.clone(); 3]).unwrap();
                let y = ola(&dft, &clean).unwrap();
                let hf = cfr(&h, n).unwrap();
                for i in 0..3 {
                    for k in 0..n {
                        let want = hf[k] * x.get(i, k);
                        assert!((y.get(i, k) - want).norm() <= 1e-10 * want.norm().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn single_block_stream_is_finite() {
        let dft = Dft::new(16);
        let gi = small_gi(4);
        let x = Grid::from_rows(vec![vec![C64::new(1.0, 0.0); 16]], GridRole::TxFreq);
        let sig = assemble(&dft, &x, &gi).unwrap();
        let y = ola(&dft, &sig).unwrap();
        assert!(y.as_slice().iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    }

    #[test]
    fn equalizer_guard_and_homogeneity() {
        let y = Grid::from_rows(vec![vec![C64::new(2.0, 1.0), C64::new(1.0, 0.0)]], GridRole::RxFreq);
        let h = Grid::from_rows(vec![vec![C64::new(1.0, 1.0), ZERO]], GridRole::CfrEstimate);
        let e = equalize(&y, &h).unwrap();
        assert_eq!(e.nulled, vec![false, true]);
        assert_eq!(e.z.get(0, 1), ZERO);
        let h2 = Grid::from_rows(vec![vec![C64::new(2.0, 2.0), C64::new(3.0, 0.0)]], GridRole::CfrEstimate);
        let e2 = equalize(&y, &h2).unwrap();
        assert!((e2.z.get(0, 0) * 2.0 - e.z.get(0, 0)).norm() < 1e-15);
    }
}
