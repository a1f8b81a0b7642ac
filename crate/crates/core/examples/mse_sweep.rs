//! A short reproducible sweep on the desk preset, printed as CSV.

use tds_ofdm::harness::{format_csv, parse_snr, run, EstimatorKind, Preset, SimConfig};
use tds_ofdm::refiners::RefinerKind;

fn main() -> tds_ofdm::Result<()> {
    let mut cfg = SimConfig::preset(Preset::Desk);
    cfg.estimators = vec![
        EstimatorKind::Pn,
        EstimatorKind::Refined(RefinerKind::Ma1d),
        EstimatorKind::Refined(RefinerKind::Wiener1d),
        EstimatorKind::Genie,
    ];
    cfg.snr_db = parse_snr("0:10:30")?;
    cfg.trials = 20;
    cfg.seed = 7;
    let result = run(&cfg)?;
    print!("{}", format_csv(&result.rows));
    Ok(())
}
