use crate::pn_estimator::{CfrEstimate, EstimateSource};
use crate::soft_rebuild::InstantEstimate;
use crate::{Error, Result, C64};

/// Rounds a window length up to the next odd value (at least 1).
pub fn odd_window(m: usize) -> usize {
    if m == 0 {
        1
    } else {
        m | 1
    }
}

/// Rows covered by a time window of exactly `m_t` rows anchored so that row
/// `i` sits at offset `⌊(m_t−1)/2⌋` from its start, clipped to the frame.
pub fn time_window(i: usize, m_t: usize, rows: usize) -> std::ops::Range<usize> {
    let m_t = m_t.max(1);
    let start = i.saturating_sub((m_t - 1) / 2);
    let end = (i + m_t - (m_t - 1) / 2).min(rows);
    start..end
}

/// Frequency window of odd length `m_f` centered at `k`, clipped.
pub fn freq_window(k: usize, m_f: usize, cols: usize) -> std::ops::Range<usize> {
    let half = (odd_window(m_f) - 1) / 2;
    k.saturating_sub(half)..(k + half + 1).min(cols)
}

/// Average of the reliable instantaneous estimates inside the window around
/// `(i, k)`, with its error variance `Σ var / count²`. `None` if the window
/// holds no reliable bin.
pub fn window_average(inst: &InstantEstimate, i: usize, k: usize, m_t: usize, m_f: usize) -> Option<(C64, f64)> {
    let cols = inst.cols();
    let mut sum = C64::new(0.0, 0.0);
    let mut var = 0.0;
    let mut count = 0usize;
    for p in time_window(i, m_t, inst.rows()) {
        for q in freq_window(k, m_f, cols) {
            let idx = p * cols + q;
            if inst.reliable[idx] {
                sum += inst.values.get(p, q);
                var += inst.variance[idx];
                count += 1;
            }
        }
    }
    (count > 0).then(|| {
        let c = count as f64;
        (sum / c, var / (c * c))
    })
}

/// Time-frequency moving average with edge truncation and exclusion of
/// unreliable bins. One estimate per row; `eps` is the mean per-bin error
/// variance of the row over the bins that could be estimated.
pub fn ma_2d(inst: &InstantEstimate, m_t: usize, m_f: usize) -> Result<Vec<CfrEstimate>> {
    if m_t == 0 || m_f == 0 {
        return Err(Error::InvalidParameter("averaging lengths must be ≥ 1".into()));
    }
    let cols = inst.cols();
    Ok((0..inst.rows())
        .map(|i| {
            let mut values = vec![C64::new(0.0, 0.0); cols];
            let mut reliable = vec![false; cols];
            let mut var_sum = 0.0;
            for k in 0..cols {
                if let Some((v, var)) = window_average(inst, i, k, m_t, m_f) {
                    values[k] = v;
                    reliable[k] = true;
                    var_sum += var;
                }
            }
            let n_ok = reliable.iter().filter(|&&r| r).count();
            let eps = if n_ok > 0 { var_sum / n_ok as f64 } else { 0.0 };
            CfrEstimate::new(values, eps, EstimateSource::DataAided).with_reliability(reliable)
        })
        .collect())
}

/// Frequency-only moving average over an odd window of `m` subcarriers.
pub fn ma_1d(inst: &InstantEstimate, m: usize) -> Result<Vec<CfrEstimate>> {
    ma_2d(inst, 1, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Grid, GridRole};

    fn inst_from(rows: Vec<Vec<C64>>, var: f64) -> InstantEstimate {
        let g = Grid::from_rows(rows, GridRole::CfrEstimate);
        let n = g.rows() * g.cols();
        InstantEstimate {
            values: g,
            variance: vec![var; n],
            reliable: vec![true; n],
        }
    }

    #[test]
    fn window_shapes() {
        assert_eq!(odd_window(8), 9);
        assert_eq!(odd_window(9), 9);
        assert_eq!(freq_window(0, 9, 20), 0..5);
        assert_eq!(freq_window(10, 9, 20), 6..15);
        assert_eq!(freq_window(19, 9, 20), 15..20);
        assert_eq!(time_window(3, 2, 10), 3..5);
        assert_eq!(time_window(9, 2, 10), 9..10);
        assert_eq!(time_window(3, 3, 10), 2..5);
        assert_eq!(time_window(0, 1, 10), 0..1);
    }

    #[test]
    fn identity_and_constants() {
        let row: Vec<C64> = (0..12).map(|k| C64::new(k as f64, -(k as f64))).collect();
        let inst = inst_from(vec![row.clone()], 0.1);
        let out = ma_1d(&inst, 1).unwrap();
        assert_eq!(out[0].values, row);
        assert!((out[0].eps - 0.1).abs() < 1e-15);
        let inst = inst_from(vec![vec![C64::new(2.0, 1.0); 12]; 3], 0.1);
        for m in [1, 3, 9, 21] {
            for est in ma_2d(&inst, 2, m).unwrap() {
                assert!(est.values.iter().all(|v| (v - C64::new(2.0, 1.0)).norm() < 1e-12));
            }
        }
    }

    #[test]
    fn unreliable_bins_are_skipped() {
        let mut inst = inst_from(vec![vec![C64::new(1.0, 0.0), C64::new(100.0, 0.0), C64::new(3.0, 0.0)]], 1.0);
        inst.reliable[1] = false;
        let out = &ma_1d(&inst, 3).unwrap()[0];
        assert!((out.values[1] - 2.0).norm() < 1e-12);
        assert!((out.values[0] - 1.0).norm() < 1e-12);
        let mut lonely = inst_from(vec![vec![C64::new(1.0, 0.0)]], 1.0);
        lonely.reliable[0] = false;
        assert_eq!(ma_1d(&lonely, 3).unwrap()[0].reliable, vec![false]);
    }

    #[test]
    fn single_row_time_window_matches_1d() {
        let rows: Vec<Vec<C64>> = (0..4).map(|i| (0..10).map(|k| C64::new((i * k) as f64, 1.0)).collect()).collect();
        let inst = inst_from(rows, 0.3);
        assert_eq!(ma_2d(&inst, 1, 5).unwrap(), ma_1d(&inst, 5).unwrap());
    }

    #[test]
    fn interior_variance_shrinks_with_window() {
        let inst = inst_from(vec![vec![C64::new(0.0, 0.0); 40]], 0.5);
        let e = ma_1d(&inst, 9).unwrap();
        // interior bins average 9 samples; edges fewer
        let interior = 0.5 / 9.0;
        assert!(e[0].eps > interior && e[0].eps < 0.5);
    }
}
