use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::channel::{j0, r_f, r_t, PowerDelayProfile};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Freq,
    Time,
}

/// Correlation model a filter is designed for.
#[derive(Debug, Clone)]
pub enum Correlation {
    /// Uniform delay power over `[0, len)` samples, the worst case for a
    /// given maximum delay. Filtering is done after rotating bin `k` by
    /// `e^{+jπk(len−1)/N}`, which makes the correlation real.
    UniformDelay { len: usize, n_fft: usize },
    /// A known power delay profile (complex correlation, no rotation).
    Profile { profile: PowerDelayProfile, n_fft: usize },
    /// Jakes time correlation `J0(2π p f_d T_b)`.
    Jakes { fd_hz: f64, tb_s: f64 },
}

impl Correlation {
    fn domain(&self) -> Domain {
        match self {
            Correlation::Jakes { .. } => Domain::Time,
            _ => Domain::Freq,
        }
    }

    /// Correlation at lag `q` in the (possibly rotated) filtering domain.
    /// Only the time model accepts fractional lags.
    fn at(&self, q: f64) -> C64 {
        match self {
            Correlation::UniformDelay { len, n_fft } => C64::new(dirichlet(q.round() as i64, *len, *n_fft), 0.0),
            Correlation::Profile { profile, n_fft } => r_f(q.round() as i64, profile, *n_fft),
            Correlation::Jakes { fd_hz, tb_s } if q.fract() == 0.0 => C64::new(r_t(q as i64, *fd_hz, *tb_s), 0.0),
            Correlation::Jakes { fd_hz, tb_s } => C64::new(j0(2.0 * PI * q * fd_hz * tb_s), 0.0),
        }
    }

    fn rotation(&self) -> Option<f64> {
        match self {
            Correlation::UniformDelay { len, n_fft } => Some(PI * (*len as f64 - 1.0) / *n_fft as f64),
            _ => None,
        }
    }
}

/// `(1/L) Σ_{l<L} cos(2πq(l − (L−1)/2)/N)`: the uniform-profile frequency
/// correlation seen from the center of the delay span.
fn dirichlet(q: i64, len: usize, n_fft: usize) -> f64 {
    let center = (len as f64 - 1.0) / 2.0;
    (0..len)
        .map(|l| (2.0 * PI * q as f64 * (l as f64 - center) / n_fft as f64).cos())
        .sum::<f64>()
        / len as f64
}

/// Noise-independent part of a Wiener interpolator: the eigendecomposition
/// `R₁ = U Λ Uᴴ` of the pilot autocorrelation and `G = R₂ U`, where `R₂` is
/// the output/pilot cross-correlation. Any input error variance `σ²` is then
/// handled by `Φ⁻¹ = U (Λ + σ²)⁻¹ Uᴴ` without refactoring.
#[derive(Debug)]
pub struct WienerDesign {
    domain: Domain,
    pilots: Vec<usize>,
    out_len: usize,
    rotation: Option<f64>,
    eigvals: Vec<f64>,
    u_adj: DMatrix<C64>,
    g: DMatrix<C64>,
    g_norms: Vec<f64>,
    r0: f64,
    trace: f64,
}

impl WienerDesign {
    pub fn new(corr: Correlation, pilots: &[usize], out_len: usize) -> Result<Self> {
        Self::with_shift(corr, pilots, 0.0, out_len)
    }

    /// Design for pilots whose samples describe position `pilots[j] + shift`
    /// (the centroid of an even-length time window). Time models only.
    pub fn with_shift(corr: Correlation, pilots: &[usize], shift: f64, out_len: usize) -> Result<Self> {
        if shift != 0.0 && corr.domain() != Domain::Time {
            return Err(Error::InvalidParameter("fractional pilot positions need a time model".into()));
        }
        if pilots.is_empty() {
            return Err(Error::PilotPlan("Wiener filter needs at least one pilot".into()));
        }
        if let Some(&p) = pilots.iter().find(|&&p| p >= out_len) {
            return Err(Error::PilotPlan(format!("pilot {p} outside {out_len} outputs")));
        }
        let k = pilots.len();
        let r1 = DMatrix::from_fn(k, k, |a, b| corr.at(pilots[a] as f64 - pilots[b] as f64));
        // enforce exact Hermitian symmetry before the eigensolver
        let r1 = (&r1 + r1.adjoint()) * C64::new(0.5, 0.0);
        let trace: f64 = (0..k).map(|a| r1[(a, a)].re).sum();
        let eig = SymmetricEigen::new(r1);
        let eigvals: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        let u = eig.eigenvectors;
        let r2 = DMatrix::from_fn(out_len, k, |n, b| corr.at(n as f64 - pilots[b] as f64 - shift));
        let g = &r2 * &u;
        let g_norms = (0..k).map(|j| g.column(j).norm_squared()).collect();
        Ok(Self {
            domain: corr.domain(),
            pilots: pilots.to_vec(),
            out_len,
            rotation: corr.rotation(),
            eigvals,
            u_adj: u.adjoint(),
            g,
            g_norms,
            r0: corr.at(0.0).re,
            trace,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn pilots(&self) -> &[usize] {
        &self.pilots
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    /// `1/(λ_j + σ²)` per eigen-direction. With `σ² = 0` a diagonal jitter of
    /// `1e−12·tr(R₁)/K` is added and directions with negligible eigenvalues
    /// are dropped (pseudo-inverse), since they carry no signal.
    fn gains(&self, sigma2: f64) -> Vec<f64> {
        let k = self.eigvals.len() as f64;
        let lmax = self.eigvals.iter().cloned().fold(0.0, f64::max);
        if sigma2 > 0.0 {
            self.eigvals.iter().map(|l| 1.0 / (l + sigma2)).collect()
        } else {
            let jitter = 1e-12 * self.trace / k;
            self.eigvals
                .iter()
                .map(|&l| if l <= 1e-10 * lmax { 0.0 } else { 1.0 / (l + jitter) })
                .collect()
        }
    }

    /// Mean output error `r(0) − (1/N_out) Σ_j |g_j|²/(λ_j + σ²)`.
    pub fn residual_mse(&self, sigma2: f64) -> f64 {
        let captured: f64 = self.g_norms.iter().zip(self.gains(sigma2)).map(|(g, w)| g * w).sum();
        (self.r0 - captured / self.out_len as f64).max(0.0)
    }

    pub fn with_noise(self: &Arc<Self>, sigma2: f64) -> WienerFilter {
        WienerFilter {
            residual_mse: self.residual_mse(sigma2),
            gains: self.gains(sigma2),
            design: Arc::clone(self),
            sigma2,
        }
    }
}

/// A Wiener interpolator for a fixed input error variance.
#[derive(Debug, Clone)]
pub struct WienerFilter {
    design: Arc<WienerDesign>,
    sigma2: f64,
    gains: Vec<f64>,
    residual_mse: f64,
}

impl WienerFilter {
    pub fn domain(&self) -> Domain {
        self.design.domain
    }

    pub fn residual_mse(&self) -> f64 {
        self.residual_mse
    }

    pub fn input_err_var(&self) -> f64 {
        self.sigma2
    }

    pub fn design(&self) -> &WienerDesign {
        &self.design
    }

    fn rotate(&self, pos: usize, sign: f64) -> C64 {
        match self.design.rotation {
            Some(a) => C64::from_polar(1.0, sign * a * pos as f64),
            None => C64::new(1.0, 0.0),
        }
    }

    /// Interpolated outputs from samples at the pilot positions.
    pub fn apply(&self, samples: &[C64]) -> Result<Vec<C64>> {
        let d = &self.design;
        if samples.len() != d.pilots.len() {
            return Err(Error::LengthMismatch { expected: d.pilots.len(), got: samples.len() });
        }
        let rotated = DVector::from_iterator(
            samples.len(),
            samples.iter().zip(&d.pilots).map(|(s, &p)| s * self.rotate(p, 1.0)),
        );
        let mut proj = &d.u_adj * rotated;
        proj.iter_mut().zip(&self.gains).for_each(|(v, w)| *v *= *w);
        let out = &d.g * proj;
        Ok(out.iter().enumerate().map(|(n, v)| v * self.rotate(n, -1.0)).collect())
    }

    /// Materialized coefficient matrix `ω` (`out_len × K`) in the rotated
    /// domain, where it is real for the uniform-delay model.
    pub fn coefficients(&self) -> DMatrix<C64> {
        let d = &self.design;
        let scaled = DMatrix::from_fn(d.u_adj.nrows(), d.u_adj.ncols(), |r, c| d.u_adj[(r, c)] * self.gains[r]);
        &d.g * scaled
    }
}

/// Frequency interpolation of one symbol from its pilot samples.
pub fn wiener_1d(samples: &[C64], filter: &WienerFilter) -> Result<Vec<C64>> {
    if filter.domain() != Domain::Freq {
        return Err(Error::InvalidParameter("wiener_1d needs a frequency filter".into()));
    }
    filter.apply(samples)
}

/// Frequency pass on every pilot symbol, then a time pass on every
/// subcarrier. `pilot_grid[p]` holds the `K_f` samples of pilot symbol `p`.
/// Returns `out_len_t` rows of `out_len_f` values.
pub fn wiener_2x1d(
    pilot_grid: &[Vec<C64>],
    freq: &WienerFilter,
    time: &WienerFilter,
) -> Result<Vec<Vec<C64>>> {
    if freq.domain() != Domain::Freq || time.domain() != Domain::Time {
        return Err(Error::InvalidParameter("wiener_2x1d needs a frequency and a time filter".into()));
    }
    let k_t = time.design.pilots.len();
    if pilot_grid.len() != k_t {
        return Err(Error::LengthMismatch { expected: k_t, got: pilot_grid.len() });
    }
    let freq_rows: Vec<Vec<C64>> = pilot_grid.iter().map(|r| freq.apply(r)).collect::<Result<_>>()?;
    let n = freq.design.out_len;
    let b = time.design.out_len;
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; b];
    let mut column = vec![C64::new(0.0, 0.0); k_t];
    for k in 0..n {
        for (c, row) in column.iter_mut().zip(&freq_rows) {
            *c = row[k];
        }
        for (i, v) in time.apply(&column)?.into_iter().enumerate() {
            out[i][k] = v;
        }
    }
    Ok(out)
}

/// Piecewise-linear interpolation through the pilot samples, held constant
/// beyond the outermost pilots.
pub fn linear_interpolate(pilots: &[usize], samples: &[C64], out_len: usize) -> Vec<C64> {
    assert_eq!(pilots.len(), samples.len());
    assert!(!pilots.is_empty());
    (0..out_len)
        .map(|n| {
            let j = pilots.partition_point(|&p| p <= n);
            if j == 0 {
                samples[0]
            } else if j == pilots.len() {
                samples[j - 1]
            } else {
                let (a, b) = (pilots[j - 1], pilots[j]);
                let t = (n - a) as f64 / (b - a) as f64;
                samples[j - 1] * (1.0 - t) + samples[j] * t
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{cfr, complex_normal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn design(corr: Correlation, pilots: &[usize], out: usize) -> Arc<WienerDesign> {
        Arc::new(WienerDesign::new(corr, pilots, out).unwrap())
    }

    fn random_cir(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
        (0..len).map(|_| complex_normal(rng) / (len as f64).sqrt()).collect()
    }

    #[test]
    fn fully_sampled_noiseless_reproduces_band_limited_input() {
        let (n, len) = (32, 4);
        let all: Vec<usize> = (0..n).collect();
        let f = design(Correlation::UniformDelay { len, n_fft: n }, &all, n).with_noise(0.0);
        assert!(f.residual_mse() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = cfr(&random_cir(&mut rng, len), n).unwrap();
        let out = f.apply(&h).unwrap();
        for (a, b) in out.iter().zip(&h) {
            assert!((a - b).norm() < 1e-8);
        }
        // full-rank correlation: the filter is the identity
        let g = design(Correlation::UniformDelay { len: 8, n_fft: 8 }, &(0..8).collect::<Vec<_>>(), 8).with_noise(0.0);
        let w = g.coefficients();
        for r in 0..8 {
            for c in 0..8 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((w[(r, c)] - want).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn flat_correlation_gives_scaled_mean() {
        let n = 12;
        let pilots = [0, 4, 8];
        let s2 = 0.3;
        let f = design(Correlation::UniformDelay { len: 1, n_fft: n }, &pilots, n).with_noise(s2);
        let k = pilots.len() as f64;
        // rank-one system: every weight is 1/(K + σ²)
        let w = f.coefficients();
        for v in w.iter() {
            assert!((v - 1.0 / (k + s2)).norm() < 1e-12);
        }
        let direct = 1.0 - k / (k + s2);
        assert!((f.residual_mse() - direct).abs() < 1e-12);
        let f0 = design(Correlation::UniformDelay { len: 1, n_fft: n }, &pilots, n).with_noise(0.0);
        let out = f0.apply(&[C64::new(2.0, -1.0); 3]).unwrap();
        assert!(out.iter().all(|v| (v - C64::new(2.0, -1.0)).norm() < 1e-9));
        assert!(f0.apply(&[C64::new(0.0, 0.0); 3]).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn uniform_model_has_real_coefficients_after_rotation() {
        let n = 64;
        let pilots: Vec<usize> = (0..16).map(|p| p * 4).collect();
        let f = design(Correlation::UniformDelay { len: 5, n_fft: n }, &pilots, n).with_noise(0.05);
        assert!(f.coefficients().iter().all(|v| v.im.abs() < 1e-12));
        let prof = PowerDelayProfile::uniform(5).unwrap();
        let g = design(Correlation::Profile { profile: prof, n_fft: n }, &pilots, n).with_noise(0.05);
        assert!(g.coefficients().iter().any(|v| v.im.abs() > 1e-3));
        // both describe the same statistics, so the estimates agree
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = cfr(&random_cir(&mut rng, 5), n).unwrap();
        let s: Vec<C64> = pilots.iter().map(|&p| h[p]).collect();
        for (a, b) in f.apply(&s).unwrap().iter().zip(g.apply(&s).unwrap()) {
            assert!((a - b).norm() < 1e-9);
        }
        assert!((f.residual_mse() - g.residual_mse()).abs() < 1e-12);
    }

    #[test]
    fn coefficients_solve_the_normal_equations() {
        let n = 48;
        let pilots: Vec<usize> = (0..12).map(|p| p * 4).collect();
        let s2 = 0.02;
        let corr = Correlation::UniformDelay { len: 6, n_fft: n };
        let f = design(corr.clone(), &pilots, n).with_noise(s2);
        let w = f.coefficients();
        let k = pilots.len();
        let phi = DMatrix::from_fn(k, k, |a, b| corr.at(pilots[a] as f64 - pilots[b] as f64) + if a == b { C64::new(s2, 0.0) } else { C64::new(0.0, 0.0) });
        let theta = DMatrix::from_fn(n, k, |r, b| corr.at(r as f64 - pilots[b] as f64));
        let resid = &w * &phi - &theta;
        assert!(resid.norm() <= 1e-10 * theta.norm());
        // residual error against the explicit trace expression
        let tr: f64 = (0..n).map(|r| (w.row(r) * theta.row(r).adjoint())[(0, 0)].re).sum();
        assert!((f.residual_mse() - (1.0 - tr / n as f64)).abs() < 1e-12);
    }

    #[test]
    fn time_filter_degenerate_cases() {
        let f = design(Correlation::Jakes { fd_hz: 0.0, tb_s: 1e-3 }, &[0], 4).with_noise(0.0);
        let out = f.apply(&[C64::new(1.5, 0.5)]).unwrap();
        assert!(out.iter().all(|v| (v - C64::new(1.5, 0.5)).norm() < 1e-9));
        let f = design(Correlation::Jakes { fd_hz: 0.0, tb_s: 1e-3 }, &[0, 2], 4).with_noise(0.1);
        let out = f.apply(&[C64::new(1.0, 0.0), C64::new(3.0, 0.0)]).unwrap();
        // static channel: equal weights on both pilots
        assert!(out.windows(2).all(|w| (w[0] - w[1]).norm() < 1e-12));
        assert!((out[0] - C64::new(4.0 / 2.1, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn separable_grid_is_reconstructed() {
        let (n, b) = (32, 8);
        let fp: Vec<usize> = (0..n).collect();
        let tp: Vec<usize> = (0..b).collect();
        let freq = design(Correlation::UniformDelay { len: 4, n_fft: n }, &fp, n).with_noise(0.0);
        let time = design(Correlation::Jakes { fd_hz: 300.0, tb_s: 1e-3 }, &tp, b).with_noise(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bk = cfr(&random_cir(&mut rng, 4), n).unwrap();
        let a: Vec<C64> = (0..b).map(|_| complex_normal(&mut rng)).collect();
        let grid: Vec<Vec<C64>> = a.iter().map(|ai| bk.iter().map(|bv| ai * bv).collect()).collect();
        let out = wiener_2x1d(&grid, &freq, &time).unwrap();
        for i in 0..b {
            for k in 0..n {
                assert!((out[i][k] - grid[i][k]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn linear_interpolation_basics() {
        let out = linear_interpolate(&[0, 4], &[C64::new(0.0, 0.0), C64::new(4.0, 0.0)], 6);
        let re: Vec<f64> = out.iter().map(|v| v.re).collect();
        assert_eq!(re, vec![0.0, 1.0, 2.0, 3.0, 4.0, 4.0]);
    }
}
