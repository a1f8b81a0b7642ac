//! One trial of the iterative receiver on the desk TU-6 preset: per-pass
//! MSE of the combined estimate, its analytic error and the uncoded BER.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tds_ofdm::harness::{EstimatorKind, Preset, Scenario, SimConfig};
use tds_ofdm::phy::demap_hard;
use tds_ofdm::refiners::RefinerKind;

fn main() -> tds_ofdm::Result<()> {
    let mut cfg = SimConfig::preset(Preset::Desk);
    cfg.iterations = 3;
    let kind = EstimatorKind::Refined(RefinerKind::Wiener1d);
    cfg.estimators = vec![kind];
    let scenario = Scenario::new(&cfg)?;
    let snr_db = 12.0;
    let receiver = scenario.receiver(kind, snr_db)?;
    let draw = scenario.draw(snr_db, &mut ChaCha8Rng::seed_from_u64(4))?;
    let n = cfg.fft_size;

    for (t, pass) in scenario.passes(kind, &receiver, &draw)?.iter().enumerate() {
        let mse_of = |est: &[tds_ofdm::pn_estimator::CfrEstimate]| {
            est.iter()
                .zip(&draw.truth)
                .map(|(e, h)| e.values.iter().zip(h).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n as f64)
                .sum::<f64>()
                / est.len() as f64
        };
        let hard = demap_hard(pass.z.z.as_slice(), &scenario.constellation);
        let ber = hard.iter().zip(&draw.bits).filter(|(a, b)| a != b).count() as f64 / hard.len() as f64;
        let data = pass.data_aided.as_deref().map(|d| format!("{:.3e}", mse_of(d))).unwrap_or_else(|| "-".into());
        println!(
            "pass {t}: combined MSE {:.3e}, analytic ε {:.3e}, data-aided MSE {data}, BER {ber:.2e}",
            mse_of(&pass.estimates),
            pass.eps()
        );
    }
    Ok(())
}
