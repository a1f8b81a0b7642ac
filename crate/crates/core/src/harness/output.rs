//! CSV rows and the JSON sidecar.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::SimConfig;
use super::run::ResultRow;
use crate::Result;

pub const CSV_HEADER: &str = "snr_db,estimator,iteration,mse_empirical,eps_analytic,ber_uncoded,trials,wall_time_s";

pub fn format_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let wall = r.wall_time_s.map_or_else(String::new, |w| format!("{w:.3}"));
        let _ = writeln!(
            s,
            "{},{},{},{:.6e},{:.6e},{:.6e},{},{}",
            r.snr_db, r.estimator, r.iteration, r.mse_empirical, r.eps_analytic, r.ber_uncoded, r.trials, wall
        );
    }
    s
}

#[derive(Serialize)]
struct Sidecar<'a> {
    seed: u64,
    csv: &'a str,
    config: BTreeMap<String, String>,
}

pub fn sidecar_json(cfg: &SimConfig, csv_name: &str) -> String {
    let side = Sidecar { seed: cfg.seed, csv: csv_name, config: cfg.to_pairs().into_iter().collect() };
    serde_json::to_string_pretty(&side).expect("string map always serializes")
}

/// Writes `path` and `path` with a `.json` extension. Returns the sidecar path.
pub fn write_outputs(path: &Path, cfg: &SimConfig, rows: &[ResultRow]) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, format_csv(rows))?;
    let side = path.with_extension("json");
    let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    std::fs::write(&side, sidecar_json(cfg, &name))?;
    Ok(side)
}
