//! Fast oracle checks runnable from the command line.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{cfr, complex_normal, j0, realize, ChannelRealization, PowerDelayProfile};
use crate::combiner::combining_weight;
use crate::dft::Dft;
use crate::grid::{Grid, GridRole};
use crate::phy::{assemble, ola, propagate, Constellation, Modulation};
use crate::sequences::{generate_mseq, PnSequence};
use crate::C64;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, tol: f64) -> CheckResult {
    CheckResult { name, passed: value <= tol, detail: format!("{value:.3e} (tolerance {tol:.1e})") }
}

fn dft_vs_naive() -> f64 {
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<C64> = (0..n).map(|_| complex_normal(&mut rng)).collect();
    let fast = Dft::new(n).forward(&x);
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let naive: C64 = x
                .iter()
                .enumerate()
                .map(|(m, v)| v * C64::from_polar(scale, -2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64))
                .sum();
            (naive - fast[k]).norm()
        })
        .fold(0.0, f64::max)
}

fn mseq_autocorrelation() -> f64 {
    let bits = generate_mseq(7, 0x89, 1).expect("order-7 primitive polynomial");
    let s: Vec<f64> = bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect();
    let n = s.len();
    (1..n)
        .map(|lag| {
            let c: f64 = (0..n).map(|i| s[i] * s[(i + lag) % n]).sum();
            (c + 1.0).abs()
        })
        .fold(0.0, f64::max)
}

fn ola_identity() -> f64 {
    let (n, nu, rows) = (64, 16, 4);
    let dft = Dft::new(n);
    let pn = PnSequence::from_lfsr(3, 0xb, 1, nu, 1.0).expect("order-3 sequence");
    let c = Constellation::new(Modulation::Qpsk);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Grid::from_rows(
        (0..rows).map(|_| (0..n).map(|_| c.points()[rand::Rng::random_range(&mut rng, 0..4)]).collect()).collect(),
        GridRole::TxFreq,
    );
    let taps: Vec<C64> = (0..nu).map(|_| complex_normal(&mut rng)).collect();
    let ch = ChannelRealization::static_taps(&taps, rows);
    let rx = propagate(&assemble(&dft, &x, &pn).expect("frame"), &ch, 0.0, &mut rng).expect("propagate");
    let cleaned = crate::phy::remove_pn(&rx, &pn, &vec![taps.clone(); rows]).expect("removal");
    let y = ola(&dft, &cleaned).expect("ola");
    let h = cfr(&taps, n).expect("cfr");
    let mut worst: f64 = 0.0;
    for i in 0..rows {
        for k in 0..n {
            let want = h[k] * x.get(i, k);
            worst = worst.max((y.get(i, k) - want).norm() / want.norm().max(1e-12));
        }
    }
    worst
}

fn combiner_argmin() -> f64 {
    let mut worst: f64 = 0.0;
    for (e1, e2) in [(0.02, 0.01), (1e-4, 0.3), (0.5, 0.5), (0.07, 0.002)] {
        let f = |b: f64| b * b * e1 + (1.0 - b) * (1.0 - b) * e2;
        let best = (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap_or(0.5);
        worst = worst.max((combining_weight(e1, e2) - best).abs());
    }
    worst
}

fn jakes_lag_correlation() -> f64 {
    let (fd, tb, blocks) = (50.0, 1e-3, 20_000);
    let profile = PowerDelayProfile::new(&[0], &[1.0]).expect("single tap");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut acc = vec![0.0; 6];
    let runs = 4;
    for _ in 0..runs {
        let ch = realize(&profile, fd, tb, blocks, &mut rng).expect("realization");
        for (p, a) in acc.iter_mut().enumerate() {
            let s: f64 = (0..blocks - p).map(|i| (ch.taps(i)[0].conj() * ch.taps(i + p)[0]).re).sum();
            *a += s / (blocks - p) as f64 / runs as f64;
        }
    }
    acc.iter()
        .enumerate()
        .map(|(p, a)| (a - j0(2.0 * std::f64::consts::PI * p as f64 * fd * tb)).abs())
        .fold(0.0, f64::max)
}

/// Runs the quick checks in order.
pub fn selftest() -> Vec<CheckResult> {
    vec![
        check("unitary DFT matches the direct sum", dft_vs_naive(), 1e-12),
        check("m-sequence off-peak autocorrelation is -1", mseq_autocorrelation(), 1e-12),
        check("overlap-add gives circular convolution", ola_identity(), 1e-10),
        check("combining weight minimizes the quadratic", combiner_argmin(), 1e-3),
        check("fading autocorrelation follows J0", jakes_lag_correlation(), 0.08),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
