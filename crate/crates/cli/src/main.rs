//! Command-line experiment runner.

mod report;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use satedge::dil::{evaluate_accuracy, evaluate_scheme, SchemeMetrics};
use satedge::experiment::{all_schemes, demos, run_compare, run_sweep, scheme_action, Pipeline, SweepKind};
use satedge::neural::checkpoint;
use satedge::oracle::{read_dataset, write_dataset};
use satedge::{geometry, Config, Error, MlpModel, Scheme};

#[derive(Parser, Debug)]
#[command(name = "satedge", version, about = "LEO satellite offloading and caching experiments")]
struct Cli {
    /// key = value config file; missing keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set subtasks=4 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Restrict eval/compare to one scheme.
    #[arg(long, global = true)]
    policy: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Label the configured number of episodes with the oracle.
    GenDataset,
    /// Train the policy and write model.txt and loss_curve.csv.
    Train {
        /// Train from a dataset file instead of relabeling.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score schemes against oracle labels on the test split.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Paired simulation of all schemes on fresh episodes.
    Compare {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Retrain and evaluate across a grid.
    Sweep {
        /// hidden-layers or rain
        kind: String,
        /// Comma-separated grid; defaults to the standard grid of the kind.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Print the coverage time for one pass.
    Coverage {
        #[arg(long)]
        altitude_km: Option<f64>,
        #[arg(long)]
        min_elevation_deg: Option<f64>,
        #[arg(long)]
        inclination_deg: Option<f64>,
        /// Minimal angular distance between ground trace and vehicle.
        #[arg(long, default_value_t = 0.0)]
        theta_m_deg: f64,
        /// Satellite angular velocity; the circular-orbit rate when omitted.
        #[arg(long)]
        sat_angular_velocity: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.downcast_ref::<Error>().map_or("io", Error::category);
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("error[{category}]: {message}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_path(p)?,
        None => Config::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {kv:?} is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_model(path: &Path) -> Result<MlpModel> {
    let f = File::open(path).with_context(|| format!("opening model {}", path.display()))?;
    Ok(checkpoint::load(BufReader::new(f))?)
}

fn save_model(out: &Path, model: &MlpModel) -> Result<()> {
    let mut w = create(out, "model.txt")?;
    checkpoint::save(model, &mut w)?;
    w.flush()?;
    Ok(())
}

fn policy(cli: &Cli) -> Result<Option<Scheme>> {
    Ok(cli.policy.as_deref().map(str::parse).transpose()?)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::GenDataset => {
            let pipeline = Pipeline::new(cfg.clone(), cli.seed)?;
            let dataset = pipeline.dataset()?;
            let mut w = create(&cli.out, "dataset.csv")?;
            write_dataset(&mut w, &cfg.hash(cli.seed), &demos(&dataset))?;
            w.flush()?;
            println!("wrote {} demonstrations to {}", dataset.len(), cli.out.join("dataset.csv").display());
        }
        Command::Train { dataset } => {
            let pipeline = Pipeline::new(cfg.clone(), cli.seed)?;
            let demos = match dataset {
                Some(path) => {
                    let f = File::open(path).with_context(|| format!("opening dataset {}", path.display()))?;
                    let (hash, demos) = read_dataset(BufReader::new(f))?;
                    if hash != cfg.hash(cli.seed) {
                        return Err(Error::Config(format!(
                            "dataset was generated from config {hash}, current config is {}",
                            cfg.hash(cli.seed)
                        ))
                        .into());
                    }
                    demos
                }
                None => demos(&pipeline.dataset()?),
            };
            let (model, curve) = pipeline.train_on(&demos, &pipeline.train_config())?;
            save_model(&cli.out, &model)?;
            report::write_loss_curve(create(&cli.out, "loss_curve.csv")?, &curve)?;
            println!(
                "best epoch {} of {}: validation loss {:.6} (ln 2 = {:.6})",
                curve.best_epoch,
                curve.validation.len() - 1,
                curve.validation[curve.best_epoch],
                std::f64::consts::LN_2
            );
        }
        Command::Eval { model } => {
            let pipeline = Pipeline::new(cfg.clone(), cli.seed)?;
            let schemes = match policy(cli)? {
                Some(s) => vec![s],
                None => all_schemes(),
            };
            let model = match schemes.contains(&Scheme::Docs) {
                true => Some(load_model(&model.clone().unwrap_or_else(|| cli.out.join("model.txt")))?),
                false => None,
            };
            let test = pipeline.label(pipeline.split().test.clone())?;
            let limit = cfg.search_limit as u128;
            let docs = model.as_ref().map(|m| (m, pipeline.norm()));
            let rows = schemes
                .iter()
                .map(|&s| {
                    evaluate_scheme(&s.to_string(), &test, &cfg.prices, |state| {
                        Ok(scheme_action(s, state, &cfg.prices, limit, docs)?.0)
                    })
                })
                .collect::<satedge::Result<Vec<SchemeMetrics>>>()?;
            report::write_metrics(create(&cli.out, "metrics.csv")?, &rows)?;
            if let Some(m) = &model {
                let acc = evaluate_accuracy(m, &test, pipeline.norm(), &cfg.prices)?;
                println!(
                    "docs: exact match {:.4}, per-bit {:.4}, reward ratio {:.4}, {:.1} us per inference",
                    acc.docs.exact_match,
                    acc.docs.per_bit_accuracy,
                    acc.reward_ratio,
                    acc.mean_inference_s * 1e6
                );
            }
            print!("{}", report::metrics_table(&rows));
        }
        Command::Compare { model } => {
            let pipeline = Pipeline::new(cfg.clone(), cli.seed)?;
            let schemes = match policy(cli)? {
                Some(s) => vec![s],
                None => all_schemes(),
            };
            let model = match (schemes.contains(&Scheme::Docs), model) {
                (false, _) => None,
                (true, Some(path)) => Some(load_model(path)?),
                (true, None) => {
                    let path = cli.out.join("model.txt");
                    if path.exists() {
                        Some(load_model(&path)?)
                    } else {
                        log::warn!("no model at {}, training one", path.display());
                        let (m, curve) = pipeline.train_on(&demos(&pipeline.dataset()?), &pipeline.train_config())?;
                        save_model(&cli.out, &m)?;
                        report::write_loss_curve(create(&cli.out, "loss_curve.csv")?, &curve)?;
                        Some(m)
                    }
                }
            };
            let cmp = run_compare(&pipeline, model.as_ref(), &schemes, pipeline.compare_ids())?;
            report::write_comparison(create(&cli.out, "compare.csv")?, &cmp)?;
            print!("{}", report::comparison_table(&cmp));
        }
        Command::Sweep { kind, grid } => {
            let kind: SweepKind = kind.parse()?;
            let grid = grid.clone().unwrap_or_else(|| kind.default_grid());
            let points = run_sweep(kind, &cfg, cli.seed, &grid)?;
            report::write_sweep(create(&cli.out, &format!("sweep_{kind}.csv"))?, &points)?;
            print!("{}", report::sweep_table(kind, &points));
        }
        Command::Coverage {
            altitude_km,
            min_elevation_deg,
            inclination_deg,
            theta_m_deg,
            sat_angular_velocity,
        } => {
            let mut orbit = cfg.orbit.clone();
            if let Some(v) = altitude_km {
                orbit.altitude_km = *v;
            }
            if let Some(v) = min_elevation_deg {
                orbit.min_elevation_deg = *v;
            }
            if let Some(v) = inclination_deg {
                orbit.inclination_deg = *v;
            }
            if let Some(v) = sat_angular_velocity {
                orbit.sat_angular_velocity_rad_s = *v;
            }
            let params = orbit.params(theta_m_deg.to_radians());
            let t = geometry::coverage_time(&params)?;
            println!("{t}");
        }
    }
    Ok(())
}
