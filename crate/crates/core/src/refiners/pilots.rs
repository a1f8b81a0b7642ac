use crate::{Error, Result};

/// Virtual pilot grid: every `l_f`-th subcarrier of every `l_t`-th symbol
/// of a `block_len`-symbol interpolation block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VirtualPilotPlan {
    pub n: usize,
    pub l_f: usize,
    pub l_t: usize,
    pub k_f: usize,
    pub k_t: usize,
    pub block_len: usize,
}

impl VirtualPilotPlan {
    pub fn freq_positions(&self) -> Vec<usize> {
        (0..self.k_f).map(|p| p * self.l_f).collect()
    }

    pub fn time_positions(&self) -> Vec<usize> {
        (0..self.k_t).map(|p| p * self.l_t).collect()
    }

    /// The full product set `Ω` as `(symbol, subcarrier)` pairs.
    pub fn indices(&self) -> Vec<(usize, usize)> {
        let f = self.freq_positions();
        self.time_positions()
            .into_iter()
            .flat_map(|i| f.iter().map(move |&k| (i, k)))
            .collect()
    }
}

/// Chooses pilot spacings that sample the CFR at twice its Nyquist rate in
/// both directions (`L_f·L/N ≤ 1/4`, `L_t·T_b·f_d ≤ 1/4`), capped by the
/// averaging lengths.
pub fn plan_pilots(
    n: usize,
    len: usize,
    block_len: usize,
    fd_hz: f64,
    tb_s: f64,
    m: usize,
    m_t: usize,
) -> Result<VirtualPilotPlan> {
    if len == 0 || n == 0 {
        return Err(Error::PilotPlan("FFT size and channel length must be positive".into()));
    }
    let max_f = n / (4 * len);
    if max_f == 0 {
        return Err(Error::PilotPlan(format!(
            "frequency sampling rule L_f·L/N ≤ 1/4 cannot hold with N={n}, L={len}; \
             use a larger FFT or a shorter channel"
        )));
    }
    let l_f = m.max(1).min(max_f);
    let spread = fd_hz * tb_s;
    let l_t = if spread <= 0.0 {
        m_t.max(1)
    } else {
        let max_t = (1.0 / (4.0 * spread)).floor();
        if max_t < 1.0 {
            return Err(Error::PilotPlan(format!(
                "time sampling rule L_t·T_b·f_d ≤ 1/4 cannot hold with T_b·f_d={spread}"
            )));
        }
        m_t.max(1).min(max_t as usize)
    };
    if block_len < l_t {
        return Err(Error::PilotPlan(format!(
            "block of {block_len} symbols is shorter than the time pilot spacing {l_t}"
        )));
    }
    Ok(VirtualPilotPlan {
        n,
        l_f,
        l_t,
        k_f: n / l_f,
        k_t: block_len / l_t,
        block_len,
    })
}
