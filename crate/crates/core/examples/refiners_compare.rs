//! Runs every refiner on the same instantaneous estimate of a fading TU-6
//! frame and compares the measured MSE with each refiner's analytic value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tds_ofdm::channel::{cfr, complex_normal, doppler_hz, preset_profile, realize, ChannelPreset};
use tds_ofdm::phy::{Constellation, Modulation};
use tds_ofdm::refiners::{FreqModel, Refiner, RefinerConfig, RefinerKind};
use tds_ofdm::soft_rebuild::{instantaneous_estimate, SoftSymbolGrid};
use tds_ofdm::{Grid, GridRole};

fn main() -> tds_ofdm::Result<()> {
    let (n, rows, fs) = (512, 16, 1.024e6);
    let tb = 568.0 / fs;
    let fd = doppler_hz(120.0, 500e6);
    let profile = preset_profile(ChannelPreset::Tu6, fs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let ch = realize(&profile, fd, tb, rows, &mut rng)?;
    let truth: Vec<Vec<_>> = (0..rows).map(|i| cfr(ch.taps(i), n)).collect::<tds_ofdm::Result<_>>()?;

    let c = Constellation::new(Modulation::Qpsk);
    let noise_var = 10f64.powf(-1.5);
    let x = Grid::from_rows(
        (0..rows).map(|_| (0..n).map(|_| c.points()[(complex_normal(&mut rng).re > 0.0) as usize]).collect()).collect(),
        GridRole::TxFreq,
    );
    let mut y = Grid::zeros(rows, n, GridRole::RxFreq);
    for i in 0..rows {
        for k in 0..n {
            y.set(i, k, truth[i][k] * x.get(i, k) + complex_normal(&mut rng) * noise_var.sqrt());
        }
    }
    let soft = SoftSymbolGrid { eta: vec![1.0; rows * n], eta_bar: 1.0, x_hat: x };
    let inst = instantaneous_estimate(&soft, &y, &c, &vec![noise_var; n])?;

    for kind in [RefinerKind::Ma1d, RefinerKind::Ma2d, RefinerKind::Wiener1d, RefinerKind::Wiener2x1d] {
        let cfg = RefinerConfig {
            kind,
            m: 9,
            m_t: 2,
            m_f: 9,
            block_len: Some(8),
            wiener_len: profile.len(),
            freq_model: FreqModel::Uniform,
        };
        let refiner = Refiner::new(cfg, n, rows, fd, tb)?;
        let out = refiner.refine(&inst, None)?;
        let mse: f64 = out
            .iter()
            .zip(&truth)
            .map(|(e, t)| e.values.iter().zip(t).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n as f64)
            .sum::<f64>()
            / rows as f64;
        let eps = out.iter().map(|e| e.eps).sum::<f64>() / rows as f64;
        println!("{kind:>10}: measured MSE {mse:.3e}, analytic {eps:.3e}");
    }
    println!("instantaneous estimate alone: {noise_var:.3e}");
    Ok(())
}
