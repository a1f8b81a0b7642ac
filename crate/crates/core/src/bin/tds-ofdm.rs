use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tds_ofdm::harness::{self, format_csv, parse_snr, trial_seed, Scenario, SimConfig};
use tds_ofdm::Error;

#[derive(Parser)]
#[command(name = "tds-ofdm", version, about = "TDS-OFDM channel estimation link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full SNR grid and write CSV plus a JSON sidecar.
    Sweep(Common),
    /// Run one trial at the first SNR point and print every pass.
    Trial(Common),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated estimators (pn, ma1d, wiener1d, ma2d, wiener2x1d, genie).
    #[arg(long)]
    estimator: Option<String>,
    /// SNR grid in dB: `a,b,c` or `start:step:stop`.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Fill the wall_time_s column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    /// Extra key=value overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<SimConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::from_file(p)?,
            None => SimConfig::preset(harness::Preset::Desk),
        };
        if let Some(p) = &self.preset {
            let keep = cfg.clone();
            cfg = SimConfig::preset(p.parse()?);
            if self.config.is_some() {
                // file values other than the preset still apply
                for (k, v) in keep.to_pairs().into_iter().filter(|(k, _)| k != "preset") {
                    if keep_differs(&keep, &k, &v) {
                        cfg.set(&k, &v)?;
                    }
                }
            }
        }
        if let Some(e) = &self.estimator {
            cfg.set("estimator", e)?;
        }
        if let Some(s) = &self.snr {
            cfg.snr_db = parse_snr(s)?;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(i) = self.iterations {
            cfg.iterations = i;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.timing |= self.timing;
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// True when `key` in `cfg` was changed away from its own preset default.
fn keep_differs(cfg: &SimConfig, key: &str, value: &str) -> bool {
    SimConfig::preset(cfg.preset)
        .to_pairs()
        .into_iter()
        .find(|(k, _)| k == key)
        .is_none_or(|(_, d)| d != value)
}

fn sweep(opts: &Common) -> Result<(), Error> {
    let cfg = opts.resolve()?;
    let res = harness::run(&cfg)?;
    match &cfg.out {
        Some(path) => {
            let side = harness::write_outputs(path, &cfg, &res.rows)?;
            eprintln!("wrote {} and {}", path.display(), side.display());
        }
        None => print!("{}", format_csv(&res.rows)),
    }
    Ok(())
}

fn trial(opts: &Common) -> Result<(), Error> {
    let cfg = opts.resolve()?;
    let scn = Scenario::new(&cfg)?;
    let g = &scn.geometry;
    let snr = cfg.snr_db[0];
    println!("preset {}  N={} nu={} N_PN={}", cfg.preset, cfg.fft_size, cfg.gi_len, g.pn.n_pn());
    println!(
        "channel length {}  LS taps {}  removal taps {}  f_d={:.4} Hz  T_b={:.3e} s",
        g.profile.len(),
        g.cir_len,
        g.removal_len,
        g.fd_hz,
        g.tb_s
    );
    println!("delays {:?}", g.profile.delays());
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, 0, 0));
    let draw = scn.draw(snr, &mut rng)?;
    for &est in &cfg.estimators {
        let receiver = scn.receiver(est, snr)?;
        if let tds_ofdm::harness::EstimatorKind::Refined(kind) = est {
            if let Some(plan) = scn.refiner(kind).and_then(|r| r.freq_plan()) {
                println!("{est}: virtual pilots L_f={} K_f={} L_t={} K_t={}", plan.l_f, plan.k_f, plan.l_t, plan.k_t);
            }
        }
        let outcome = scn.evaluate(&draw, &[(est, receiver)])?;
        for s in &outcome.estimators[0].iters {
            let data = s.mse_data.map_or_else(|| "-".to_string(), |m| format!("{m:.4e}"));
            println!(
                "  {est:<10} pass {}  mse {:.4e}  eps {:.4e}  data-aided mse {}  ber {:.4e}",
                s.iteration, s.mse, s.eps, data, s.ber
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Trial(c) => trial(c),
        Command::Selftest => {
            let checks = harness::selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                return ExitCode::from(1);
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
