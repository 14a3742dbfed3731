use std::path::PathBuf;
use std::process::ExitCode;

use balancelab::balance::BalanceSeries;
use balancelab::ensembles::{fit_clique_size, gen_quasi_csg, gen_signed_er, CliqueModelSpec};
use balancelab::pipeline::{self, Cadence, PipelineConfig};
use balancelab::synthetic::{market_fixture, MarketFixtureSpec};
use balancelab::transition::detect_break;
use balancelab::wssn::{read_edge_list, write_edge_list};
use balancelab::{formats, Error, ErrorKind, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "balancelab",
    version,
    about = "Structural balance of signed stock networks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON pipeline config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    prices: Option<PathBuf>,
    #[arg(long, global = true)]
    sectors: Option<PathBuf>,
    #[arg(long, global = true)]
    epu: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Fixed kernel bandwidth as a fraction of the sample length.
    #[arg(long, global = true)]
    bandwidth: Option<f64>,
    /// weekly_friday, monthly or every_k_days:K
    #[arg(long, global = true)]
    cadence: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Model {
    Csg,
    Er,
}

#[derive(Subcommand)]
enum Command {
    /// Load, align and screen prices.
    Ingest,
    /// Log returns from the cleaned prices.
    Returns,
    /// Kendall snapshots at the configured cadence.
    Tau {
        /// Single snapshot at the last trading day on or before this date.
        #[arg(long)]
        date: Option<NaiveDate>,
    },
    /// Threshold snapshots into signed networks.
    BuildNet,
    /// Balance series, whole market and sector splits.
    Balance,
    /// Detrended cumulative sum of the balance series.
    Dcs,
    /// Balance-to-unbalance transition report.
    DetectBut {
        /// Balance CSV to read instead of the one in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Generate a quasi-CSG or signed Erdos-Renyi network.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m_neg: usize,
        #[arg(long)]
        m_pos: usize,
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long, value_enum, default_value_t = Model::Csg)]
        model: Model,
        /// Edge list path; defaults to `simulated.csv` in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit the clique size of a target network.
    FitCsg {
        /// Edge list; the last network in it is the target. Without it the
        /// pipeline's own post-transition snapshot is used.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        s_min: Option<usize>,
        #[arg(long)]
        s_max: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Signed degrees of every node in every snapshot.
    Degrees,
    /// Summary report and plots.
    Report,
    /// Every stage in order.
    Run,
    /// Write the bundled synthetic 10-ticker market into a directory.
    Fixture { dir: PathBuf },
}

fn config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::new("prices.csv", "out"),
    };
    if let Some(p) = &common.prices {
        cfg.prices = p.clone();
    }
    if common.sectors.is_some() {
        cfg.sectors = common.sectors.clone();
    }
    if common.epu.is_some() {
        cfg.epu = common.epu.clone();
    }
    if let Some(p) = &common.out {
        cfg.out = p.clone();
    }
    if let Some(e) = common.epsilon {
        cfg.epsilon = e;
    }
    if let Some(h) = common.bandwidth {
        cfg.bandwidth_h = Some(h);
        cfg.bandwidth_candidates = None;
    }
    if let Some(c) = &common.cadence {
        cfg.cadence = c.parse::<Cadence>()?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn ensure_out(cfg: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = config(&cli.common)?;
    match cli.command {
        Command::Fixture { dir } => {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            market_fixture(&MarketFixtureSpec::default())?.write(&dir)?;
        }
        Command::Run => {
            let report = pipeline::run_pipeline(&cfg)?;
            print_json(&report.transition);
        }
        Command::Ingest => {
            cfg.validate()?;
            ensure_out(&cfg)?;
            print_json(&pipeline::stage_ingest(&cfg)?);
        }
        Command::Simulate {
            n,
            m_neg,
            m_pos,
            s,
            model,
            output,
        } => {
            let seed = cfg.seed;
            let net = match model {
                Model::Csg => gen_quasi_csg(&CliqueModelSpec {
                    n,
                    m_neg,
                    m_pos,
                    s,
                    seed,
                })?,
                Model::Er => gen_signed_er(n, m_neg, m_pos, seed)?,
            };
            let path = output.unwrap_or_else(|| cfg.out.join("simulated.csv"));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            write_edge_list(&path, &[net])?;
            println!("{}", path.display());
        }
        Command::DetectBut { input: Some(path) } => {
            cfg.validate_parameters()?;
            ensure_out(&cfg)?;
            let series = BalanceSeries::read_csv(&path)
                .map_err(|e| e.in_stage("detect-but", path.display().to_string()))?;
            let report = detect_break(&series.dates(), &series.k(), &cfg.transition)
                .map_err(|e| e.in_stage("detect-but", path.display().to_string()))?;
            report.write_json(cfg.out.join(pipeline::BUT))?;
            let but: serde_json::Value = formats::read_json(&cfg.out.join(pipeline::BUT))?;
            print_json(&but);
        }
        Command::FitCsg {
            target,
            s_min,
            s_max,
            trials,
        } => {
            cfg.s_range = (
                s_min.unwrap_or(cfg.s_range.0),
                s_max.unwrap_or(cfg.s_range.1),
            );
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate_parameters()?;
            ensure_out(&cfg)?;
            match target {
                Some(path) => {
                    let nets = read_edge_list(&path)?;
                    let net = nets
                        .last()
                        .ok_or_else(|| Error::malformed(&path, "no network"))?;
                    let report =
                        fit_clique_size(net, cfg.s_range.0..=cfg.s_range.1, cfg.trials, cfg.seed)
                            .map_err(|e| e.in_stage("fit-csg", path.display().to_string()))?;
                    report.write_json(cfg.out.join(pipeline::FIT))?;
                    print_json(&report);
                }
                None => print_json(&pipeline::stage_fit_csg(&cfg)?),
            }
        }
        stage => {
            cfg.validate_parameters()?;
            ensure_out(&cfg)?;
            match stage {
                Command::Returns => {
                    pipeline::stage_returns(&cfg)?;
                }
                Command::Tau { date } => {
                    let snaps = pipeline::stage_tau(&cfg, date)?;
                    log::info!("{} snapshots", snaps.len());
                }
                Command::BuildNet => {
                    pipeline::stage_build_net(&cfg)?;
                }
                Command::Balance => {
                    pipeline::stage_balance(&cfg)?;
                }
                Command::Dcs => {
                    pipeline::stage_dcs(&cfg)?;
                }
                Command::DetectBut { input: None } => {
                    pipeline::stage_detect_but(&cfg)?;
                    let but: serde_json::Value = formats::read_json(&cfg.out.join(pipeline::BUT))?;
                    print_json(&but);
                }
                Command::Degrees => pipeline::stage_degrees(&cfg)?,
                Command::Report => {
                    pipeline::stage_report(&cfg)?;
                }
                _ => unreachable!("handled above"),
            }
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("BALANCELAB_THREADS") {
        let n: usize = v.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            Error::Config(format!(
                "BALANCELAB_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
