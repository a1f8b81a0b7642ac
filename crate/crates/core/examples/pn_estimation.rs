//! Least-squares channel estimation from the PN core: compares the analytic
//! error with the measured one and shows the interference left by imperfect
//! guard removal.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tds_ofdm::channel::{cfr, complex_normal};
use tds_ofdm::pn_estimator::{ls_pn, InterferenceKernel};
use tds_ofdm::sequences::PnSequence;

fn main() -> tds_ofdm::Result<()> {
    let (n, len) = (512, 6);
    let pn = PnSequence::from_lfsr(5, 0x25, 1, 56, 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h: Vec<_> = (0..len).map(|_| complex_normal(&mut rng) * (1.0 / len as f64).sqrt()).collect();
    let truth = cfr(&h, n)?;
    let g = pn.samples();
    let off = pn.core_offset();

    for snr_db in [0.0, 10.0, 20.0, 30.0] {
        let noise_var = 10f64.powf(-snr_db / 10.0);
        let trials = 2000;
        let (mut mse, mut eps) = (0.0, 0.0);
        for _ in 0..trials {
            let core: Vec<_> = (0..pn.n_pn())
                .map(|m| {
                    h.iter().enumerate().map(|(l, hl)| hl * g[off + m - l]).sum::<tds_ofdm::C64>()
                        + complex_normal(&mut rng) * noise_var.sqrt()
                })
                .collect();
            let est = ls_pn(&core, &pn, len, noise_var, n)?;
            eps = est.eps;
            mse += est.values.iter().zip(&truth).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n as f64;
        }
        println!("SNR {snr_db:>4} dB: analytic ε {eps:.3e}, measured {:.3e}", mse / trials as f64);
    }

    let kernel = InterferenceKernel::new(&pn, len, n);
    let sigma_i = kernel.power(1e-2);
    let mean = sigma_i.iter().sum::<f64>() / n as f64;
    let peak = sigma_i.iter().cloned().fold(0.0, f64::max);
    println!("residual guard interference at ε = 1e-2: mean {mean:.3e}, peak {peak:.3e}");
    Ok(())
}
