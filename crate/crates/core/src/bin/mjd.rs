use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mjd_forecast::backtest::{parse_combo, DriftTermId, VolTermId};
use mjd_forecast::ingest::MonthId;
use mjd_forecast::pipeline::{cmd_backtest, cmd_features, cmd_report, cmd_simulate};
use mjd_forecast::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "mjd", version, about = "Jump-diffusion hourly price forecasting backtests")]
struct Cli {
    /// Worker thread cap (also settable in the config file).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    symbol: Option<String>,
    /// First month, YYYY-MM.
    #[arg(long)]
    start: Option<MonthId>,
    /// Last month, YYYY-MM.
    #[arg(long)]
    end: Option<MonthId>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    n_sim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Drop OHLC-inconsistent rows instead of failing.
    #[arg(long)]
    lenient: bool,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, threads: Option<usize>) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.data_dir {
            cfg.data_dir = v.clone();
        }
        if let Some(v) = &self.symbol {
            cfg.symbol = v.clone();
        }
        cfg.start = self.start.or(cfg.start);
        cfg.end = self.end.or(cfg.end);
        if let Some(v) = self.window {
            cfg.window = v;
            cfg.lookback_hours = cfg.lookback_hours.max(v);
        }
        if let Some(v) = self.n_sim {
            cfg.sim.n_sim = v;
        }
        if let Some(v) = self.seed {
            cfg.sim.seed = v;
        }
        if self.lenient {
            cfg.strict = false;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        cfg.threads = threads.or(cfg.threads);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Feature table, correlation matrix and histograms.
    Features(Common),
    /// One multi-hour sample path from the latest price.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "drift")]
        drift: String,
        #[arg(long, default_value = "vol")]
        vol: String,
        #[arg(long, default_value_t = 168)]
        hours: usize,
    },
    /// The drift × volatility sweep.
    Backtest {
        #[command(flatten)]
        common: Common,
        /// Restrict to pairs, e.g. "drift_negated,forc_vol_gjr" (repeatable).
        #[arg(long)]
        combo: Vec<String>,
    },
    /// Pretty-print combos.csv sorted by a metric.
    Report {
        /// combos.csv or the backtest output directory.
        path: PathBuf,
        #[arg(long, default_value = "RMSE")]
        sort: String,
    },
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Features(common) => {
            let cfg = common.resolve(cli.threads)?;
            init_threads(cfg.threads);
            for p in cmd_features(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Simulate {
            common,
            drift,
            vol,
            hours,
        } => {
            let drift: DriftTermId = drift.parse()?;
            let vol: VolTermId = vol.parse()?;
            let cfg = common.resolve(cli.threads)?;
            init_threads(cfg.threads);
            for p in cmd_simulate(&cfg, drift, vol, hours)? {
                println!("{}", p.display());
            }
        }
        Command::Backtest { common, combo } => {
            let combos = combo.iter().map(|c| parse_combo(c)).collect::<Result<Vec<_>, _>>()?;
            let cfg = common.resolve(cli.threads)?;
            init_threads(cfg.threads);
            let out = cmd_backtest(&cfg, (!combos.is_empty()).then_some(combos.as_slice()))?;
            println!(
                "{} combos written to {} (fingerprint {})",
                out.reports.len(),
                cfg.output_dir.display(),
                out.manifest.config_fingerprint
            );
            if !out.manifest.combo_failures.is_empty() {
                return Err(Error::Model(format!(
                    "{} combo(s) failed, see run_manifest.json",
                    out.manifest.combo_failures.len()
                )));
            }
        }
        Command::Report { path, sort } => {
            print!("{}", cmd_report(&path, &sort)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
