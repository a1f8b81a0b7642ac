//! Draws a TU-6 Rayleigh channel at desk scale and compares the measured
//! tap autocorrelation with the Jakes model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tds_ofdm::channel::{
    coherence_bandwidth_rms, doppler_hz, j0, preset_profile, realize, sfn_profile, ChannelPreset,
};

fn main() -> tds_ofdm::Result<()> {
    let fs = 1.024e6;
    let tb = 568.0 / fs;
    let fd = doppler_hz(30.0, 500e6);
    let profile = preset_profile(ChannelPreset::Tu6, fs)?;
    println!("TU-6 at {fs} Hz: delays {:?}", profile.delays());
    println!("powers {:?}", profile.powers().iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>());
    println!("f_d = {fd:.2} Hz, f_d·T_b = {:.4}", fd * tb);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let blocks = 20_000;
    let ch = realize(&profile, fd, tb, blocks, &mut rng)?;
    let tap = 1;
    let x: Vec<_> = (0..blocks).map(|i| ch.taps(i)[tap]).collect();
    let p0: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / blocks as f64;
    println!("tap {tap}: measured power {p0:.3}, nominal {:.3}", profile.powers()[tap]);
    for lag in [0usize, 5, 10, 20, 40] {
        let r: f64 = (0..blocks - lag).map(|i| (x[i].conj() * x[i + lag]).re).sum::<f64>() / (blocks - lag) as f64;
        let model = j0(2.0 * std::f64::consts::PI * lag as f64 * fd * tb);
        println!("lag {lag:>2}: measured {:.3}, J0 {model:.3}", r / p0);
    }

    let dtmb = 7.56e6;
    let tu6 = preset_profile(ChannelPreset::Tu6, dtmb)?;
    let sfn = sfn_profile(&tu6, 23.33e-6, 10.0, dtmb)?;
    println!(
        "coherence bandwidth at DTMB rate: TU-6 {:.1} kHz, SFN {:.2} kHz",
        coherence_bandwidth_rms(&tu6, dtmb, 0.9)? / 1e3,
        coherence_bandwidth_rms(&sfn, dtmb, 0.9)? / 1e3
    );
    Ok(())
}
