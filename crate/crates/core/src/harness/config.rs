//! Experiment description: presets, flat `key=value` parsing and the
//! derived link geometry.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{doppler_hz, preset_profile, sfn_profile, ChannelPreset, FadingMethod, PowerDelayProfile};
use crate::phy::Modulation;
use crate::refiners::{FreqModel, RefinerKind};
use crate::sequences::PnSequence;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// N=512, ν=56, 1.024 MHz (2 kHz spacing, `ν/N ≈ 1/9`), TU-6.
    Desk,
    /// Desk geometry with a second TU-6 transmitter 23.33 µs later.
    DeskSfn,
    /// N=3780, ν=420, 7.56 MHz, TU-6.
    Dtmb,
    /// DTMB geometry with a second transmitter 23.33 µs later.
    DtmbSfn,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::DeskSfn => "desk-sfn",
            Preset::Dtmb => "dtmb",
            Preset::DtmbSfn => "dtmb-sfn",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "desk" => Ok(Preset::Desk),
            "desk-sfn" => Ok(Preset::DeskSfn),
            "dtmb" => Ok(Preset::Dtmb),
            "dtmb-sfn" => Ok(Preset::DtmbSfn),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

/// Channel estimator evaluated by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    /// PN-based LS estimate only.
    Pn,
    /// PN start refined by a data-aided refiner and MMSE combining.
    Refined(RefinerKind),
    /// True channel (equalization and guard removal).
    Genie,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Pn => "pn",
            EstimatorKind::Genie => "genie",
            EstimatorKind::Refined(k) => k.name(),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pn" => Ok(EstimatorKind::Pn),
            "genie" | "perfect" => Ok(EstimatorKind::Genie),
            other => other
                .parse::<RefinerKind>()
                .map(EstimatorKind::Refined)
                .map_err(|_| Error::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub preset: Preset,
    pub fft_size: usize,
    pub gi_len: usize,
    pub sample_rate_hz: f64,
    pub pn_order: u32,
    pub pn_poly: u64,
    pub pn_seed: u64,
    pub pn_power_boost: f64,
    pub constellation: Modulation,
    pub channel: ChannelPreset,
    /// Second-transmitter delay; `None` disables the SFN echo.
    pub sfn_delay_us: Option<f64>,
    pub sfn_atten_db: f64,
    pub velocity_kmh: f64,
    pub fc_hz: f64,
    pub jakes: FadingMethod,
    pub estimators: Vec<EstimatorKind>,
    pub m: usize,
    pub m_t: usize,
    pub m_f: usize,
    pub block_len: Option<usize>,
    /// LS estimate length; defaults to the assumed channel length capped at
    /// the protected span `ν − N_PN` (and at `N_PN`).
    pub cir_len: Option<usize>,
    /// Channel length assumed by the Wiener filters and the pilot plan;
    /// defaults to the true profile length.
    pub wiener_len: Option<usize>,
    pub wiener_model: FreqModel,
    pub iterations: usize,
    /// Let the combiner raise the PN estimate's `ε` from measured data.
    pub check_pn_eps: bool,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    /// Measured OFDM symbols per trial (a warm-up symbol is added in front).
    pub symbols: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub timing: bool,
}

fn snr_range(lo: f64, step: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

impl SimConfig {
    pub fn preset(preset: Preset) -> Self {
        let desk = matches!(preset, Preset::Desk | Preset::DeskSfn);
        let sfn = matches!(preset, Preset::DeskSfn | Preset::DtmbSfn);
        let (fft_size, gi_len, fs, order, poly) = if desk {
            (512, 56, 1.024e6, 5, 0x25)
        } else {
            (3780, 420, 7.56e6, 8, 0x163)
        };
        let sfn_delay_us = sfn.then_some(23.33);
        let m = if sfn { 3 } else { 9 };
        SimConfig {
            preset,
            fft_size,
            gi_len,
            sample_rate_hz: fs,
            pn_order: order,
            pn_poly: poly,
            pn_seed: 1,
            pn_power_boost: 2.0,
            constellation: Modulation::Qpsk,
            channel: ChannelPreset::Tu6,
            sfn_delay_us,
            sfn_atten_db: 10.0,
            velocity_kmh: 30.0,
            fc_hz: 500e6,
            jakes: FadingMethod::Spectral,
            estimators: vec![
                EstimatorKind::Pn,
                EstimatorKind::Refined(RefinerKind::Ma1d),
                EstimatorKind::Refined(RefinerKind::Wiener1d),
            ],
            m,
            m_t: 2,
            m_f: m,
            block_len: None,
            cir_len: None,
            wiener_len: None,
            wiener_model: FreqModel::Uniform,
            iterations: 2,
            check_pn_eps: true,
            snr_db: if desk { snr_range(0.0, 2.5, 40.0) } else { snr_range(0.0, 5.0, 30.0) },
            trials: 500,
            symbols: 10,
            seed: 1,
            out: None,
            threads: None,
            timing: false,
        }
    }

    /// Parses flat `key=value` text. A `preset` key selects the defaults
    /// the remaining keys override, wherever it appears.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let preset = match pairs.iter().rev().find(|(k, _)| k == "preset") {
            Some((_, v)) => v.parse()?,
            None => Preset::Desk,
        };
        let mut cfg = SimConfig::preset(preset);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key. Unknown keys and malformed values are config errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
        }
        fn int(key: &str, v: &str) -> Result<u64> {
            let r = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(hex, 16),
                None => v.parse(),
            };
            r.map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
        }
        fn opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
            if v.is_empty() || v.eq_ignore_ascii_case("auto") || v.eq_ignore_ascii_case("none") {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        let v = value.trim();
        match key.trim() {
            "preset" => *self = SimConfig::preset(v.parse()?),
            "fft_size" => self.fft_size = num(key, v)?,
            "gi_len" => self.gi_len = num(key, v)?,
            "sample_rate_hz" => self.sample_rate_hz = num(key, v)?,
            "pn_order" => self.pn_order = num(key, v)?,
            "pn_poly" => self.pn_poly = int(key, v)?,
            "pn_seed" => self.pn_seed = int(key, v)?,
            "pn_power_boost" => self.pn_power_boost = num(key, v)?,
            "constellation" => self.constellation = v.parse()?,
            "channel.preset" => self.channel = v.parse()?,
            "channel.sfn_delay_us" => self.sfn_delay_us = opt(key, v)?,
            "channel.sfn_atten_db" => self.sfn_atten_db = num(key, v)?,
            "channel.velocity_kmh" => self.velocity_kmh = num(key, v)?,
            "channel.fc_hz" => self.fc_hz = num(key, v)?,
            "channel.jakes" => self.jakes = v.parse()?,
            "estimator" | "refiner" => {
                self.estimators = v.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?
            }
            "M" | "m" => self.m = num(key, v)?,
            "M_t" | "m_t" => self.m_t = num(key, v)?,
            "M_f" | "m_f" => self.m_f = num(key, v)?,
            "block_len" | "B" => self.block_len = opt(key, v)?,
            "cir_len" => self.cir_len = opt(key, v)?,
            "wiener_len" => self.wiener_len = opt(key, v)?,
            "wiener_model" => self.wiener_model = v.parse()?,
            "iterations" => self.iterations = num(key, v)?,
            "check_pn_eps" => self.check_pn_eps = num(key, v)?,
            "snr_db" => self.snr_db = parse_snr(v)?,
            "trials" => self.trials = num(key, v)?,
            "symbols" => self.symbols = num(key, v)?,
            "seed" => self.seed = int(key, v)?,
            "out" => self.out = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "threads" => self.threads = opt(key, v)?,
            "timing" => self.timing = num(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.gi_len >= self.fft_size {
            return Err(Error::Config(format!("gi_len {} must be below fft_size {}", self.gi_len, self.fft_size)));
        }
        if self.trials == 0 || self.symbols == 0 {
            return Err(Error::Config("trials and symbols must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("empty SNR grid".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimator selected".into()));
        }
        if !(self.sample_rate_hz > 0.0) || !(self.pn_power_boost > 0.0) {
            return Err(Error::Config("sample rate and PN power boost must be positive".into()));
        }
        if self.m == 0 || self.m_t == 0 || self.m_f == 0 || self.threads == Some(0) {
            return Err(Error::Config("window lengths and thread count must be positive".into()));
        }
        Ok(())
    }

    /// Resolved key/value pairs in the same syntax [`parse`](Self::parse) accepts.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        fn o<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
        }
        let jakes = match self.jakes {
            FadingMethod::Spectral => "spectral",
            FadingMethod::SumOfSinusoids { .. } => "sos",
        };
        let est: Vec<&str> = self.estimators.iter().map(|e| e.name()).collect();
        let snr: Vec<String> = self.snr_db.iter().map(|s| s.to_string()).collect();
        let wm = match self.wiener_model {
            FreqModel::Uniform => "uniform",
            FreqModel::Measured => "measured",
        };
        [
            ("preset", self.preset.to_string()),
            ("fft_size", self.fft_size.to_string()),
            ("gi_len", self.gi_len.to_string()),
            ("sample_rate_hz", self.sample_rate_hz.to_string()),
            ("pn_order", self.pn_order.to_string()),
            ("pn_poly", format!("{:#x}", self.pn_poly)),
            ("pn_seed", format!("{:#x}", self.pn_seed)),
            ("pn_power_boost", self.pn_power_boost.to_string()),
            ("constellation", self.constellation.to_string()),
            ("channel.preset", self.channel.name().to_string()),
            ("channel.sfn_delay_us", self.sfn_delay_us.map_or_else(|| "none".into(), |d| d.to_string())),
            ("channel.sfn_atten_db", self.sfn_atten_db.to_string()),
            ("channel.velocity_kmh", self.velocity_kmh.to_string()),
            ("channel.fc_hz", self.fc_hz.to_string()),
            ("channel.jakes", jakes.to_string()),
            ("estimator", est.join(",")),
            ("M", self.m.to_string()),
            ("M_t", self.m_t.to_string()),
            ("M_f", self.m_f.to_string()),
            ("block_len", o(&self.block_len)),
            ("cir_len", o(&self.cir_len)),
            ("wiener_len", o(&self.wiener_len)),
            ("wiener_model", wm.to_string()),
            ("iterations", self.iterations.to_string()),
            ("check_pn_eps", self.check_pn_eps.to_string()),
            ("snr_db", snr.join(",")),
            ("trials", self.trials.to_string()),
            ("symbols", self.symbols.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// `a,b,c` or `start:step:stop` (inclusive).
pub fn parse_snr(v: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("snr_db: cannot parse `{v}`"));
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let out = if parts.len() == 3 {
        let p: Vec<f64> = parts.iter().map(|s| s.parse().map_err(|_| bad())).collect::<Result<_>>()?;
        if !(p[1] > 0.0) || p[2] < p[0] {
            return Err(bad());
        }
        snr_range(p[0], p[1], p[2])
    } else {
        v.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<Vec<f64>>>()?
    };
    if out.is_empty() || out.iter().any(|s| !s.is_finite()) {
        return Err(bad());
    }
    Ok(out)
}

/// Link geometry derived from a configuration.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub pn: PnSequence,
    pub profile: PowerDelayProfile,
    pub fd_hz: f64,
    pub tb_s: f64,
    /// LS estimate length.
    pub cir_len: usize,
    /// Length assumed by the Wiener filters and pilot plan.
    pub wiener_len: usize,
    /// CIR length used for guard removal from refined estimates.
    pub removal_len: usize,
    /// Rows per trial including the warm-up symbol.
    pub rows: usize,
}

impl Geometry {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let pn = PnSequence::from_lfsr(cfg.pn_order, cfg.pn_poly, cfg.pn_seed, cfg.gi_len, cfg.pn_power_boost)?;
        let base = preset_profile(cfg.channel, cfg.sample_rate_hz)?;
        let profile = match cfg.sfn_delay_us {
            Some(d) => sfn_profile(&base, d * 1e-6, cfg.sfn_atten_db, cfg.sample_rate_hz)?,
            None => base,
        };
        if profile.len() > cfg.gi_len {
            return Err(Error::ChannelTooLong { len: profile.len(), n_fft: cfg.gi_len });
        }
        let n_pn = pn.n_pn();
        let wiener_len = cfg.wiener_len.unwrap_or(profile.len());
        let protected = cfg.gi_len - n_pn;
        let cir_len = cfg.cir_len.unwrap_or_else(|| wiener_len.min(protected).min(n_pn).max(1));
        if cir_len == 0 || cir_len > n_pn {
            return Err(Error::Config(format!("cir_len {cir_len} must lie in 1..={n_pn}")));
        }
        if wiener_len == 0 || wiener_len > cfg.gi_len {
            return Err(Error::Config(format!("wiener_len {wiener_len} must lie in 1..={}", cfg.gi_len)));
        }
        let removal_len = cir_len.max(wiener_len).max(profile.len()).min(cfg.gi_len);
        Ok(Geometry {
            fd_hz: doppler_hz(cfg.velocity_kmh, cfg.fc_hz),
            tb_s: (cfg.fft_size + cfg.gi_len) as f64 / cfg.sample_rate_hz,
            pn,
            profile,
            cir_len,
            wiener_len,
            removal_len,
            rows: cfg.symbols + 1,
        })
    }
}
