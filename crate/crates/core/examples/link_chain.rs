//! Runs the transmit chain, a static multipath channel with noise, PN removal
//! with the true channel and overlap-and-add, then counts uncoded bit errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tds_ofdm::channel::{cfr, complex_normal, ChannelRealization};
use tds_ofdm::dft::Dft;
use tds_ofdm::phy::{assemble, demap_hard, equalize, map_bits, ola, propagate, remove_pn, Constellation, Modulation};
use tds_ofdm::sequences::PnSequence;
use tds_ofdm::{Grid, GridRole};

fn main() -> tds_ofdm::Result<()> {
    let (n, nu, rows) = (512, 56, 8);
    let dft = Dft::new(n);
    let pn = PnSequence::from_lfsr(5, 0x25, 1, nu, 2.0)?;
    let c = Constellation::new(Modulation::Qpsk);
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let bits: Vec<u8> = (0..rows * n * 2).map(|_| rng.random_range(0..2)).collect();
    let symbols = map_bits(&bits, &c)?;
    let x = Grid::from_rows(symbols.chunks(n).map(<[_]>::to_vec).collect(), GridRole::TxFreq);

    let taps: Vec<_> = [0.8, 0.5, 0.3, 0.1].iter().map(|a| complex_normal(&mut rng) * *a).collect();
    let ch = ChannelRealization::static_taps(&taps, rows);
    let h = cfr(&taps, n)?;
    let h_grid = Grid::from_rows(vec![h; rows], GridRole::CfrEstimate);

    for snr_db in [5.0, 10.0, 15.0, 20.0] {
        let noise_var = 10f64.powf(-snr_db / 10.0);
        let rx = propagate(&assemble(&dft, &x, &pn)?, &ch, noise_var, &mut rng)?;
        let y = ola(&dft, &remove_pn(&rx, &pn, &vec![taps.clone(); rows])?)?;
        let z = equalize(&y, &h_grid)?;
        let hard = demap_hard(z.z.as_slice(), &c);
        let errors = hard.iter().zip(&bits).filter(|(a, b)| a != b).count();
        println!("SNR {snr_db:>4} dB: BER {:.2e} ({errors} errors)", errors as f64 / bits.len() as f64);
    }
    Ok(())
}
