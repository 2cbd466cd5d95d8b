//! End-to-end runs: dataset split, training, paired scheme comparison and
//! hyper-parameter sweeps.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::caching::{apply_caching_action, CacheState};
use crate::config::{CompareCache, Config};
use crate::dil::{evaluate_accuracy, infer, train, AccuracyReport, LossCurve, TrainConfig};
use crate::error::{Error, Result};
use crate::evaluator::{completion_time, reward, ActionMatrix, EpisodeState, PriceVector};
use crate::neural::{MlpModel, RangeTable};
use crate::oracle::{label_range, map_ordered, solve_optimal, Demonstration, LabeledEpisode};
use crate::policies::{baseline_action, Scheme};
use crate::scenario::Scenario;

/// Disjoint, contiguous episode-id ranges for training, validation and test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Range<u64>,
    pub validation: Range<u64>,
    pub test: Range<u64>,
}

impl Split {
    pub fn new(n: usize, train_fraction: f64, val_fraction: f64) -> Result<Self> {
        let train = (n as f64 * train_fraction).round() as u64;
        let val = (n as f64 * val_fraction).round() as u64;
        if train == 0 || train + val >= n as u64 {
            return Err(Error::Config(format!(
                "split {train_fraction}/{val_fraction} of {n} episodes leaves an empty part"
            )));
        }
        Ok(Split {
            train: 0..train,
            validation: train..train + val,
            test: train + val..n as u64,
        })
    }
}

/// A scenario plus everything derived from its config.
#[derive(Debug, Clone)]
pub struct Pipeline {
    scenario: Scenario,
    norm: RangeTable,
    split: Split,
}

impl Pipeline {
    pub fn new(cfg: Config, seed: u64) -> Result<Self> {
        let split = Split::new(cfg.dataset_size, cfg.train_fraction, cfg.val_fraction)?;
        let norm = RangeTable::from_config(&cfg)?;
        let scenario = Scenario::new(cfg, seed)?;
        Ok(Pipeline { scenario, norm, split })
    }

    pub fn config(&self) -> &Config {
        self.scenario.config()
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn norm(&self) -> &RangeTable {
        &self.norm
    }

    pub fn split(&self) -> &Split {
        &self.split
    }

    pub fn label(&self, ids: Range<u64>) -> Result<Vec<LabeledEpisode>> {
        label_range(&self.scenario, &self.norm, ids)
    }

    /// Label the whole dataset.
    pub fn dataset(&self) -> Result<Vec<LabeledEpisode>> {
        self.label(0..self.split.test.end)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig::from_model_config(&self.config().model, self.scenario.seed())
    }

    /// Train on the training part of `dataset` (as returned by
    /// [`Pipeline::dataset`], indexed by episode id), early-stopping on the validation part.
    pub fn train_on(&self, demos: &[Demonstration], cfg: &TrainConfig) -> Result<(MlpModel, LossCurve)> {
        let (tr, va) = (self.part(&self.split.train), self.part(&self.split.validation));
        if demos.len() < va.end {
            return Err(Error::Dimension {
                expected: va.end,
                got: demos.len(),
            });
        }
        train(&demos[tr], &demos[va], cfg)
    }

    /// Label, train and score on the test part in one go.
    pub fn train_and_evaluate(&self, cfg: &TrainConfig) -> Result<(MlpModel, LossCurve, AccuracyReport)> {
        let dataset = self.dataset()?;
        let (model, curve) = self.train_on(&demos(&dataset), cfg)?;
        let test = &dataset[self.part(&self.split.test)];
        let report = evaluate_accuracy(&model, test, &self.norm, &self.config().prices)?;
        Ok((model, curve, report))
    }

    /// Index range of `ids` within a dataset vector.
    pub fn part(&self, ids: &Range<u64>) -> Range<usize> {
        ids.start as usize..ids.end as usize
    }

    /// Episode ids used for comparisons: fresh ids after the dataset.
    pub fn compare_ids(&self) -> Range<u64> {
        let start = self.split.test.end;
        start..start + self.config().compare_episodes as u64
    }
}

pub fn demos(dataset: &[LabeledEpisode]) -> Vec<Demonstration> {
    dataset.iter().map(|e| e.demo.clone()).collect()
}

/// Decide for one scheme and return the cache the decision leaves behind.
pub fn scheme_action(
    scheme: Scheme,
    state: &EpisodeState,
    prices: &PriceVector,
    search_limit: u128,
    docs: Option<(&MlpModel, &RangeTable)>,
) -> Result<(ActionMatrix, CacheState)> {
    let actions = match scheme {
        Scheme::Baseline(offload, eviction) => return baseline_action(offload, eviction, state, prices),
        Scheme::Oracle => solve_optimal(state, prices, search_limit)?.0,
        Scheme::Docs => {
            let (model, norm) = docs.ok_or_else(|| Error::Config("the docs policy needs a trained model".into()))?;
            infer(model, state, norm)?
        }
    };
    let next = apply_caching_action(&state.cache, &state.task, actions.cache(), scheme.eviction())?;
    Ok((actions, next))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub mean_reward: f64,
    pub mean_completion_time_s: f64,
    pub episodes: usize,
}

/// DOCS relative to one other scheme; positive means DOCS is lower.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub against: Scheme,
    pub reward: f64,
    pub completion_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<SchemeSummary>,
}

impl Comparison {
    pub fn row(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }

    pub fn reductions(&self) -> Vec<Reduction> {
        let Some(docs) = self.row(Scheme::Docs) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|r| r.scheme != Scheme::Docs)
            .map(|r| Reduction {
                against: r.scheme,
                reward: (r.mean_reward - docs.mean_reward) / r.mean_reward,
                completion_time: (r.mean_completion_time_s - docs.mean_completion_time_s) / r.mean_completion_time_s,
            })
            .collect()
    }
}

/// DOCS, the oracle and the six baselines.
pub fn all_schemes() -> Vec<Scheme> {
    let mut v = vec![Scheme::Docs, Scheme::Oracle];
    v.extend(Scheme::BASELINES);
    v
}

/// Run every scheme over the same episodes. With persistent comparison
/// caches each scheme starts empty and carries its own cache from episode
/// to episode; otherwise every scheme sees the episode's own placement.
pub fn run_compare(pipeline: &Pipeline, model: Option<&MlpModel>, schemes: &[Scheme], ids: Range<u64>) -> Result<Comparison> {
    let cfg = pipeline.config();
    let prices = &cfg.prices;
    let limit = cfg.search_limit as u128;
    let docs = model.map(|m| (m, pipeline.norm()));
    let ids: Vec<u64> = ids.collect();
    if ids.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // per episode, per scheme: (reward, completion time)
    let scores: Vec<Vec<(f64, f64)>> = if cfg.compare_cache == CompareCache::Persistent {
        let mut caches = vec![pipeline.scenario().empty_cache(); schemes.len()];
        let mut out = Vec::with_capacity(ids.len());
        for &id in &ids {
            let mut state = pipeline.scenario().episode(id)?;
            let mut row = Vec::with_capacity(schemes.len());
            for (k, &scheme) in schemes.iter().enumerate() {
                state.cache = caches[k].clone();
                let (a, next) = scheme_action(scheme, &state, prices, limit, docs)?;
                row.push((reward(&state, &a, prices)?, completion_time(&state, &a)?));
                caches[k] = next;
            }
            out.push(row);
        }
        out
    } else {
        map_ordered(&ids, |id| {
            let state = pipeline.scenario().episode(id)?;
            schemes
                .iter()
                .map(|&scheme| {
                    let (a, _) = scheme_action(scheme, &state, prices, limit, docs)?;
                    Ok((reward(&state, &a, prices)?, completion_time(&state, &a)?))
                })
                .collect()
        })?
    };

    let n = ids.len() as f64;
    let rows = schemes
        .iter()
        .enumerate()
        .map(|(k, &scheme)| SchemeSummary {
            scheme,
            mean_reward: scores.iter().map(|r| r[k].0).sum::<f64>() / n,
            mean_completion_time_s: scores.iter().map(|r| r[k].1).sum::<f64>() / n,
            episodes: ids.len(),
        })
        .collect();
    Ok(Comparison { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    HiddenLayers,
    Rain,
}

impl SweepKind {
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepKind::HiddenLayers => vec![1.0, 2.0, 3.0, 4.0, 5.0],
            SweepKind::Rain => vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::HiddenLayers => "hidden-layers",
            SweepKind::Rain => "rain",
        })
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hidden-layers" => Ok(SweepKind::HiddenLayers),
            "rain" => Ok(SweepKind::Rain),
            other => Err(Error::Config(format!("unknown sweep {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub report: AccuracyReport,
}

/// Retrain and evaluate once per grid value. Every point uses the same
/// seed; the hidden-layer sweep also shares one labeled dataset.
pub fn run_sweep(kind: SweepKind, cfg: &Config, seed: u64, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    match kind {
        SweepKind::HiddenLayers => {
            for &v in grid {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::Config(format!("hidden layer count {v} is not a positive integer")));
                }
            }
            let pipeline = Pipeline::new(cfg.clone(), seed)?;
            let dataset = pipeline.dataset()?;
            let train_demos = demos(&dataset);
            let test = &dataset[pipeline.part(&pipeline.split.test)];
            grid.iter()
                .map(|&v| {
                    let mut tc = pipeline.train_config();
                    tc.hidden_layers = v as usize;
                    let (model, _) = pipeline.train_on(&train_demos, &tc)?;
                    log::info!("hidden layers {v}: trained");
                    let report = evaluate_accuracy(&model, test, pipeline.norm(), &cfg.prices)?;
                    Ok(SweepPoint { value: v, report })
                })
                .collect()
        }
        SweepKind::Rain => grid
            .iter()
            .map(|&v| {
                let mut c = cfg.clone();
                c.link.rain_ratio = v;
                let pipeline = Pipeline::new(c, seed)?;
                let (_, _, report) = pipeline.train_and_evaluate(&pipeline.train_config())?;
                log::info!("rain ratio {v}: trained");
                Ok(SweepPoint { value: v, report })
            })
            .collect(),
    }
}
