//! Builds the desk-scale PN guard interval and prints its structure, the
//! flatness of its spectrum and the periodic autocorrelation of the core.

use tds_ofdm::sequences::{generate_mseq, primitive_poly, PnSequence};

fn main() -> tds_ofdm::Result<()> {
    let order = 5;
    let poly = primitive_poly(order).expect("tabulated order");
    let pn = PnSequence::from_lfsr(order, poly, 1, 56, 2.0)?;
    println!("order {order}, polynomial {poly:#x}, N_PN = {}, guard ν = {}", pn.n_pn(), pn.nu());
    println!("core starts at {}, channels up to {} taps stay ISI-free", pn.core_offset(), pn.protected_len());

    let bits = generate_mseq(order, poly, 1)?;
    let ones = bits.iter().filter(|&&b| b == 1).count();
    println!("m-sequence balance: {ones} ones, {} zeros", bits.len() - ones);

    let mags: Vec<f64> = pn.spectrum().iter().map(|p| p.norm_sqr()).collect();
    let (lo, hi) = mags.iter().fold((f64::MAX, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
    println!("|P[k]|² ranges over [{lo:.3}, {hi:.3}]");

    let core = pn.core();
    let n = core.len();
    for q in 0..4 {
        let r: f64 = (0..n).map(|i| (core[i].conj() * core[(i + q) % n]).re).sum();
        println!("periodic autocorrelation at lag {q}: {:.3}", r / pn.amplitude().powi(2));
    }
    Ok(())
}
