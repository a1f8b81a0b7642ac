//! Noise suppression of the instantaneous data-aided estimate: moving
//! averages in one and two dimensions, virtual-pilot planning, and Wiener
//! interpolation (1-D and two cascaded 1-D passes). Every refiner reports
//! the analytic error of its output alongside the values.

mod moving_average;
mod pilots;
mod wiener;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use moving_average::{freq_window, ma_1d, ma_2d, odd_window, time_window, window_average};
pub use pilots::{plan_pilots, VirtualPilotPlan};
pub use wiener::{linear_interpolate, wiener_1d, wiener_2x1d, Correlation, Domain, WienerDesign, WienerFilter};

use crate::channel::PowerDelayProfile;
use crate::pn_estimator::{CfrEstimate, EstimateSource};
use crate::soft_rebuild::InstantEstimate;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RefinerKind {
    Ma1d,
    Wiener1d,
    Ma2d,
    Wiener2x1d,
}

impl RefinerKind {
    pub fn name(self) -> &'static str {
        match self {
            RefinerKind::Ma1d => "ma1d",
            RefinerKind::Wiener1d => "wiener1d",
            RefinerKind::Ma2d => "ma2d",
            RefinerKind::Wiener2x1d => "wiener2x1d",
        }
    }
}

impl fmt::Display for RefinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RefinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ma1d" => Ok(RefinerKind::Ma1d),
            "wiener1d" => Ok(RefinerKind::Wiener1d),
            "ma2d" => Ok(RefinerKind::Ma2d),
            "wiener2x1d" => Ok(RefinerKind::Wiener2x1d),
            other => Err(Error::Config(format!("unknown refiner `{other}`"))),
        }
    }
}

/// Which frequency correlation the Wiener filters assume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqModel {
    /// Uniform delay power over `wiener_len` samples (precomputed once).
    Uniform,
    /// Tap powers of the PN-based CIR estimate, redesigned per frame.
    Measured,
}

impl FromStr for FreqModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(FreqModel::Uniform),
            "measured" => Ok(FreqModel::Measured),
            other => Err(Error::Config(format!("unknown Wiener model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinerConfig {
    pub kind: RefinerKind,
    /// 1-D averaging length (rounded up to odd).
    pub m: usize,
    pub m_t: usize,
    /// 2-D frequency averaging length (rounded up to odd).
    pub m_f: usize,
    /// Interpolation block length in symbols; `None` uses the whole frame.
    pub block_len: Option<usize>,
    /// Maximum channel delay (samples) assumed by the pilot plan and filters.
    pub wiener_len: usize,
    pub freq_model: FreqModel,
}

/// A refiner with its Wiener designs precomputed for a frame geometry.
#[derive(Debug, Clone)]
pub struct Refiner {
    cfg: RefinerConfig,
    n: usize,
    rows: usize,
    freq_plan: Option<VirtualPilotPlan>,
    freq_design: Option<Arc<WienerDesign>>,
    /// Time-domain designs keyed by block length.
    time_designs: BTreeMap<usize, (VirtualPilotPlan, Arc<WienerDesign>)>,
}

impl Refiner {
    pub fn new(cfg: RefinerConfig, n: usize, rows: usize, fd_hz: f64, tb_s: f64) -> Result<Self> {
        let mut r = Refiner {
            n,
            rows,
            freq_plan: None,
            freq_design: None,
            time_designs: BTreeMap::new(),
            cfg,
        };
        match r.cfg.kind {
            RefinerKind::Ma1d | RefinerKind::Ma2d => {}
            RefinerKind::Wiener1d => {
                let plan = plan_pilots(n, r.cfg.wiener_len, 1, 0.0, tb_s, r.cfg.m, 1)?;
                r.set_freq(plan)?;
            }
            RefinerKind::Wiener2x1d => {
                let b = r.cfg.block_len.unwrap_or(rows).clamp(1, rows.max(1));
                let plan = plan_pilots(n, r.cfg.wiener_len, b, fd_hz, tb_s, r.cfg.m_f, r.cfg.m_t)?;
                r.set_freq(plan)?;
                let mut lens = vec![b];
                if rows % b != 0 {
                    lens.push(rows % b);
                }
                for len in lens {
                    let mut p = plan;
                    p.block_len = len;
                    p.k_t = (len / p.l_t).max(1);
                    // an even time window averages around a half-symbol point
                    let shift = if r.cfg.m_t % 2 == 0 { 0.5 } else { 0.0 };
                    let design = WienerDesign::with_shift(
                        Correlation::Jakes { fd_hz, tb_s },
                        &p.time_positions(),
                        shift,
                        len,
                    )?;
                    r.time_designs.insert(len, (p, Arc::new(design)));
                }
            }
        }
        Ok(r)
    }

    fn set_freq(&mut self, plan: VirtualPilotPlan) -> Result<()> {
        if self.cfg.freq_model == FreqModel::Uniform {
            let corr = Correlation::UniformDelay { len: self.cfg.wiener_len, n_fft: self.n };
            self.freq_design = Some(Arc::new(WienerDesign::new(corr, &plan.freq_positions(), self.n)?));
        }
        self.freq_plan = Some(plan);
        Ok(())
    }

    pub fn config(&self) -> &RefinerConfig {
        &self.cfg
    }

    pub fn freq_plan(&self) -> Option<&VirtualPilotPlan> {
        self.freq_plan.as_ref()
    }

    fn freq_design(&self, measured: Option<&PowerDelayProfile>) -> Result<Arc<WienerDesign>> {
        if let Some(d) = &self.freq_design {
            return Ok(Arc::clone(d));
        }
        let profile = measured.ok_or_else(|| {
            Error::InvalidParameter("measured Wiener model needs a delay profile".into())
        })?;
        let plan = self.freq_plan.expect("Wiener refiner always has a plan");
        let corr = Correlation::Profile { profile: profile.clone(), n_fft: self.n };
        Ok(Arc::new(WienerDesign::new(corr, &plan.freq_positions(), self.n)?))
    }

    /// Averages around each pilot of row `i`. Pilots whose window holds no
    /// reliable bin get a wider window. Returns `None` if the row has no
    /// reliable bin at all.
    fn pilot_samples(&self, inst: &InstantEstimate, i: usize, m_t: usize, m_f: usize) -> Option<(Vec<C64>, f64)> {
        let plan = self.freq_plan.as_ref()?;
        let mut samples = Vec::with_capacity(plan.k_f);
        let mut var = 0.0;
        for k in plan.freq_positions() {
            let mut width = odd_window(m_f);
            let (v, e) = loop {
                if let Some(hit) = window_average(inst, i, k, m_t, width) {
                    break hit;
                }
                if width >= 2 * self.n {
                    return None;
                }
                width += 2;
            };
            samples.push(v);
            var += e;
        }
        Some((samples, var / plan.k_f as f64))
    }

    fn unreliable_row(&self) -> CfrEstimate {
        CfrEstimate::new(vec![C64::new(0.0, 0.0); self.n], 0.0, EstimateSource::DataAided)
            .with_reliability(vec![false; self.n])
    }

    /// Refines a frame of instantaneous estimates into one estimate per row.
    /// `measured` is only consulted for [`FreqModel::Measured`].
    pub fn refine(&self, inst: &InstantEstimate, measured: Option<&PowerDelayProfile>) -> Result<Vec<CfrEstimate>> {
        if inst.cols() != self.n || inst.rows() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows * self.n,
                got: inst.rows() * inst.cols(),
            });
        }
        match self.cfg.kind {
            RefinerKind::Ma1d => ma_1d(inst, self.cfg.m),
            RefinerKind::Ma2d => ma_2d(inst, self.cfg.m_t, self.cfg.m_f),
            RefinerKind::Wiener1d => {
                let design = self.freq_design(measured)?;
                (0..self.rows)
                    .map(|i| match self.pilot_samples(inst, i, 1, self.cfg.m) {
                        None => Ok(self.unreliable_row()),
                        Some((samples, var)) => {
                            let f = design.with_noise(var);
                            Ok(CfrEstimate::new(wiener_1d(&samples, &f)?, f.residual_mse(), EstimateSource::DataAided))
                        }
                    })
                    .collect()
            }
            RefinerKind::Wiener2x1d => {
                let design = self.freq_design(measured)?;
                let b = self.cfg.block_len.unwrap_or(self.rows).clamp(1, self.rows.max(1));
                let mut out = Vec::with_capacity(self.rows);
                let mut start = 0;
                while start < self.rows {
                    let len = b.min(self.rows - start);
                    let (plan, time_design) = &self.time_designs[&len];
                    let mut grid = Vec::with_capacity(plan.k_t);
                    let mut var = 0.0;
                    let mut ok = true;
                    for ip in plan.time_positions() {
                        match self.pilot_samples(inst, start + ip, self.cfg.m_t, self.cfg.m_f) {
                            Some((s, v)) => {
                                grid.push(s);
                                var += v;
                            }
                            None => ok = false,
                        }
                    }
                    if !ok {
                        out.extend((0..len).map(|_| self.unreliable_row()));
                    } else {
                        let freq = design.with_noise(var / plan.k_t as f64);
                        let time = time_design.with_noise(freq.residual_mse());
                        let eps = time.residual_mse();
                        out.extend(
                            wiener_2x1d(&grid, &freq, &time)?
                                .into_iter()
                                .map(|row| CfrEstimate::new(row, eps, EstimateSource::DataAided)),
                        );
                    }
                    start += len;
                }
                Ok(out)
            }
        }
    }
}
