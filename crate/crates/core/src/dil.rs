//! Offline training of the imitation policy on oracle demonstrations and
//! its online use.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::evaluator::{completion_time, reward, ActionMatrix, EpisodeState, PriceVector};
use crate::neural::{
    cross_entropy_loss, decode_actions, encode_state, AdamConfig, Gradients, MlpModel, RangeTable, Workspace,
    FEATURE_LAYOUT_VERSION,
};
use crate::oracle::{Demonstration, LabeledEpisode};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn from_model_config(m: &ModelConfig, seed: u64) -> Self {
        TrainConfig {
            hidden_layers: m.hidden_layers,
            hidden_width: m.hidden_width,
            adam: AdamConfig {
                learning_rate: m.learning_rate,
                beta1: m.beta1,
                beta2: m.beta2,
                epsilon: m.epsilon,
            },
            batch_size: m.batch_size,
            epochs: m.epochs,
            patience: m.patience,
            seed,
        }
    }
}

/// Per-epoch losses. Index 0 is the untrained model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossCurve {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
    pub best_epoch: usize,
}

/// Mean per-sample loss of `model` over `demos`.
pub fn dataset_loss(model: &MlpModel, demos: &[Demonstration]) -> Result<f64> {
    if demos.is_empty() {
        return Ok(f64::NAN);
    }
    let mut ws = Workspace::new(model);
    let mut total = 0.0;
    for d in demos {
        model.forward_into(&d.features, &mut ws)?;
        total += cross_entropy_loss(ws.output(), &d.labels.labels());
    }
    Ok(total / demos.len() as f64)
}

/// Mini-batch Adam with early stopping on validation loss. Returns the
/// parameters from the best validation epoch (the training loss when no
/// validation set is given).
pub fn train(train_set: &[Demonstration], val_set: &[Demonstration], cfg: &TrainConfig) -> Result<(MlpModel, LossCurve)> {
    let first = train_set.first().ok_or(Error::EmptyDataset)?;
    let input = first.features.len();
    let output = 2 * first.labels.len();
    let mut dims = vec![input];
    dims.extend(std::iter::repeat_n(cfg.hidden_width, cfg.hidden_layers));
    dims.push(output);
    let mut model = MlpModel::new(&dims, cfg.adam, cfg.seed)?;

    let labels: Vec<Vec<f64>> = train_set.iter().map(|d| d.labels.labels()).collect();
    let monitor = |model: &MlpModel, train_loss: f64| -> Result<f64> {
        if val_set.is_empty() {
            Ok(train_loss)
        } else {
            dataset_loss(model, val_set)
        }
    };

    let mut curve = LossCurve::default();
    let initial_train = dataset_loss(&model, train_set)?;
    let initial_val = monitor(&model, initial_train)?;
    curve.train.push(initial_train);
    curve.validation.push(initial_val);
    let mut best = (initial_val, model.clone());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0074_7261_696e);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut ws = Workspace::new(&model);
    let mut grads = Gradients::zeros_like(&model);
    let batch = cfg.batch_size.max(1);
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            grads.clear();
            for &i in chunk {
                total += model.accumulate_gradients(&train_set[i].features, &labels[i], &mut ws, &mut grads)?;
            }
            grads.scale(1.0 / chunk.len() as f64);
            model.adam_step(&grads);
        }
        let train_loss = total / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!("epoch {epoch}: training loss {train_loss}")));
        }
        let val_loss = monitor(&model, train_loss)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("epoch {epoch}: validation loss {val_loss}")));
        }
        curve.train.push(train_loss);
        curve.validation.push(val_loss);
        log::debug!("epoch {epoch}: train {train_loss:.5} validation {val_loss:.5}");
        if val_loss < best.0 {
            best = (val_loss, model.clone());
            curve.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok((best.1, curve))
}

/// Encode, run the network and decode into a feasible action.
pub fn infer(model: &MlpModel, state: &EpisodeState, norm: &RangeTable) -> Result<ActionMatrix> {
    if model.layout_version != FEATURE_LAYOUT_VERSION {
        return Err(Error::LayoutMismatch {
            expected: FEATURE_LAYOUT_VERSION,
            found: model.layout_version,
        });
    }
    let (x, clamped) = encode_state(state, norm);
    if clamped > 0 {
        log::warn!("{clamped} features clamped into range");
    }
    let probs = model.forward(&x)?;
    if probs.len() != 2 * state.task.len() {
        return Err(Error::Dimension {
            expected: 2 * state.task.len(),
            got: probs.len(),
        });
    }
    Ok(decode_actions(&probs, state))
}

/// How one scheme fares on a labeled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeMetrics {
    pub scheme: String,
    /// Fraction of episodes whose whole action matrix equals the oracle's.
    pub exact_match: f64,
    pub per_bit_accuracy: f64,
    pub mean_reward: f64,
    pub mean_completion_time_s: f64,
    pub episodes: usize,
}

/// Score `act` on every episode against the oracle labels.
pub fn evaluate_scheme<F>(scheme: &str, episodes: &[LabeledEpisode], prices: &PriceVector, mut act: F) -> Result<SchemeMetrics>
where
    F: FnMut(&EpisodeState) -> Result<ActionMatrix>,
{
    if episodes.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut exact = 0usize;
    let mut bits_right = 0usize;
    let mut bits = 0usize;
    let mut reward_sum = 0.0;
    let mut time_sum = 0.0;
    for ep in episodes {
        let a = act(&ep.state)?;
        reward_sum += reward(&ep.state, &a, prices)?;
        time_sum += completion_time(&ep.state, &a)?;
        let want = ep.demo.labels.label_bits();
        let got = a.label_bits();
        exact += (want == got) as usize;
        bits_right += want.bytes().zip(got.bytes()).filter(|(x, y)| x == y).count();
        bits += want.len();
    }
    let n = episodes.len() as f64;
    Ok(SchemeMetrics {
        scheme: scheme.to_string(),
        exact_match: exact as f64 / n,
        per_bit_accuracy: bits_right as f64 / bits as f64,
        mean_reward: reward_sum / n,
        mean_completion_time_s: time_sum / n,
        episodes: episodes.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub docs: SchemeMetrics,
    pub oracle_mean_reward: f64,
    /// Mean DOCS reward over mean oracle reward.
    pub reward_ratio: f64,
    /// Mean wall time of one inference (encode, forward, decode), seconds.
    pub mean_inference_s: f64,
}

pub fn evaluate_accuracy(
    model: &MlpModel,
    testset: &[LabeledEpisode],
    norm: &RangeTable,
    prices: &PriceVector,
) -> Result<AccuracyReport> {
    let mut spent = 0.0;
    let docs = evaluate_scheme("docs", testset, prices, |s| {
        let start = Instant::now();
        let a = infer(model, s, norm);
        spent += start.elapsed().as_secs_f64();
        a
    })?;
    let oracle_mean_reward = testset.iter().map(|e| e.demo.opt_reward).sum::<f64>() / testset.len() as f64;
    Ok(AccuracyReport {
        reward_ratio: docs.mean_reward / oracle_mean_reward,
        mean_inference_s: spent / testset.len() as f64,
        oracle_mean_reward,
        docs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::oracle::build_dataset;

    fn small(n: usize, seed: u64) -> Vec<LabeledEpisode> {
        build_dataset(n, seed, &Config::default()).unwrap()
    }

    fn demos(eps: &[LabeledEpisode]) -> Vec<Demonstration> {
        eps.iter().map(|e| e.demo.clone()).collect()
    }

    fn quick(seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_layers: 2,
            hidden_width: 32,
            adam: AdamConfig {
                learning_rate: 0.01,
                ..Default::default()
            },
            batch_size: 16,
            epochs: 300,
            patience: 300,
            seed,
        }
    }

    #[test]
    fn memorizes_single_sample() {
        let d = demos(&small(1, 1));
        let (model, curve) = train(&d, &[], &quick(1)).unwrap();
        assert!(*curve.train.last().unwrap() < 1e-3);
        assert!(dataset_loss(&model, &d).unwrap() < 1e-3);
    }

    #[test]
    fn training_is_deterministic() {
        let d = demos(&small(40, 2));
        let mut cfg = quick(5);
        cfg.epochs = 5;
        let (a, ca) = train(&d[..30], &d[30..], &cfg).unwrap();
        let (b, cb) = train(&d[..30], &d[30..], &cfg).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(a, b);
    }

    #[test]
    fn fits_two_hundred_samples() {
        let d = demos(&small(200, 3));
        let mut cfg = quick(3);
        cfg.hidden_width = 64;
        let (model, curve) = train(&d, &[], &cfg).unwrap();
        let loss = dataset_loss(&model, &d).unwrap();
        assert!(loss < 0.05, "training loss {loss}");
        assert!(curve.validation[curve.best_epoch] <= curve.validation[0]);
    }

    #[test]
    fn best_validation_not_worse_than_start() {
        let d = demos(&small(60, 4));
        let mut cfg = quick(4);
        cfg.epochs = 10;
        cfg.patience = 2;
        let (model, curve) = train(&d[..40], &d[40..], &cfg).unwrap();
        let val = dataset_loss(&model, &d[40..]).unwrap();
        assert!(val <= curve.validation[0]);
        assert_eq!(val, curve.validation[curve.best_epoch]);
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(train(&[], &[], &quick(1)), Err(Error::EmptyDataset)));
    }

    #[test]
    fn oracle_labels_score_perfectly() {
        let eps = small(30, 6);
        let prices = PriceVector::default();
        let m = evaluate_scheme("oracle", &eps, &prices, |s| {
            Ok(eps.iter().find(|e| &e.state == s).unwrap().demo.labels.clone())
        })
        .unwrap();
        assert_eq!(m.exact_match, 1.0);
        assert_eq!(m.per_bit_accuracy, 1.0);
        let opt = eps.iter().map(|e| e.demo.opt_reward).sum::<f64>() / 30.0;
        assert!((m.mean_reward / opt - 1.0).abs() < 1e-12);
    }

    #[test]
    fn layout_mismatch_rejected() {
        let eps = small(1, 7);
        let cfg = Config::default();
        let norm = RangeTable::from_config(&cfg).unwrap();
        let (mut model, _) = train(&demos(&eps), &[], &TrainConfig { epochs: 1, ..quick(1) }).unwrap();
        assert!(infer(&model, &eps[0].state, &norm).is_ok());
        model.layout_version += 1;
        assert!(matches!(infer(&model, &eps[0].state, &norm), Err(Error::LayoutMismatch { .. })));
    }
}
