//! Exhaustive search over the pre-classified action space and the
//! demonstration datasets built from it.

use std::io::{BufRead, Write};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::evaluator::{feasible_actions, subtask_reward, ActionMatrix, ActionPair, EpisodeState, PriceVector};
use crate::neural::features::{encode_state, RangeTable};
use crate::scenario::Scenario;

pub const DEFAULT_SEARCH_LIMIT: u128 = 1_000_000;

const DATASET_MAGIC: &str = "# satedge-dataset v1";

/// A state paired with its optimal action.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub episode_id: u64,
    pub features: Vec<f64>,
    pub labels: ActionMatrix,
    pub opt_reward: f64,
}

/// A demonstration together with the state it was computed from.
#[derive(Debug, Clone)]
pub struct LabeledEpisode {
    pub state: EpisodeState,
    pub demo: Demonstration,
}

/// Number of joint actions left after pre-classification.
pub fn search_space_size(state: &EpisodeState) -> u128 {
    state
        .task
        .subtasks()
        .iter()
        .map(|st| feasible_actions(st, state).len() as u128)
        .product()
}

/// Minimum-reward feasible action matrix.
///
/// Candidates are visited in lexicographic order and only a strictly
/// smaller reward replaces the incumbent, so ties resolve to the
/// lexicographically smallest matrix. The reward of a matrix is the sum of
/// per-sub-task contributions (hits are judged against the placement at
/// episode start), so each contribution is evaluated once and candidate
/// rewards are summed from the table in sub-task order.
pub fn solve_optimal(state: &EpisodeState, prices: &PriceVector, limit: u128) -> Result<(ActionMatrix, f64)> {
    let size = search_space_size(state);
    if size > limit {
        return Err(Error::SearchLimit { size, limit });
    }
    let choices: Vec<Vec<(ActionPair, f64)>> = state
        .task
        .subtasks()
        .iter()
        .map(|st| {
            feasible_actions(st, state)
                .iter()
                .map(|pair| (pair, subtask_reward(st, pair, state, prices)))
                .collect()
        })
        .collect();

    let n = choices.len();
    let mut digits = vec![0usize; n];
    let mut best_digits = digits.clone();
    let mut best = f64::INFINITY;
    loop {
        let total: f64 = digits.iter().zip(&choices).map(|(&d, c)| c[d].1).sum();
        if total < best {
            best = total;
            best_digits.copy_from_slice(&digits);
        }
        // Odometer with the last sub-task as the fastest digit.
        let mut v = n;
        loop {
            if v == 0 {
                let pairs: Vec<ActionPair> =
                    best_digits.iter().zip(&choices).map(|(&d, c)| c[d].0).collect();
                return Ok((ActionMatrix::from_pairs(&pairs), best));
            }
            v -= 1;
            digits[v] += 1;
            if digits[v] < choices[v].len() {
                break;
            }
            digits[v] = 0;
        }
    }
}

/// Label episode `id` of `scenario`.
pub fn label_episode(scenario: &Scenario, norm: &RangeTable, id: u64) -> Result<LabeledEpisode> {
    let cfg = scenario.config();
    let state = scenario.episode(id)?;
    let (labels, opt_reward) = solve_optimal(&state, &cfg.prices, cfg.search_limit as u128)?;
    let (features, clamped) = encode_state(&state, norm);
    if clamped > 0 {
        log::warn!("episode {id}: {clamped} features clamped into range");
    }
    Ok(LabeledEpisode {
        state,
        demo: Demonstration {
            episode_id: id,
            features,
            labels,
            opt_reward,
        },
    })
}

/// Label episodes `ids` in order, fanning out over the available cores.
pub fn label_range(scenario: &Scenario, norm: &RangeTable, ids: std::ops::Range<u64>) -> Result<Vec<LabeledEpisode>> {
    let ids: Vec<u64> = ids.collect();
    map_ordered(&ids, |id| label_episode(scenario, norm, id))
}

/// `ids.iter().map(f).collect()`, split across worker threads. Results
/// come back in input order whatever the worker count.
pub(crate) fn map_ordered<T, F>(ids: &[u64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    if workers <= 1 || ids.len() < 2 * workers {
        return ids.iter().map(|&id| f(id)).collect();
    }
    let chunk = ids.len().div_ceil(workers);
    let f = &f;
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|s| {
        let handles: Vec<_> = ids
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&id| f(id)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(ids.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// `n` labeled episodes `0..n` of the scenario `(cfg, seed)`.
pub fn build_dataset(n: usize, seed: u64, cfg: &Config) -> Result<Vec<LabeledEpisode>> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let scenario = Scenario::new(cfg.clone(), seed)?;
    let norm = RangeTable::from_config(cfg)?;
    label_range(&scenario, &norm, 0..n as u64)
}

/// Writes the header line and one record per demonstration:
/// `episode_id,feature...,label_bits,opt_reward`.
pub fn write_dataset<W: Write>(mut out: W, config_hash: &str, demos: &[Demonstration]) -> Result<()> {
    let features = demos.first().map_or(0, |d| d.features.len());
    let labels = demos.first().map_or(0, |d| 2 * d.labels.len());
    writeln!(out, "{DATASET_MAGIC} config={config_hash} features={features} labels={labels}")?;
    let mut line = String::new();
    for d in demos {
        line.clear();
        line.push_str(&d.episode_id.to_string());
        for f in &d.features {
            line.push(',');
            line.push_str(&f.to_string());
        }
        line.push(',');
        line.push_str(&d.labels.label_bits());
        line.push(',');
        line.push_str(&d.opt_reward.to_string());
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a dataset file, returning the config hash and the records.
pub fn read_dataset<R: BufRead>(input: R) -> Result<(String, Vec<Demonstration>)> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::EmptyDataset)??;
    let perr = |line: usize, reason: String| Error::Parse { line, reason };
    let rest = header
        .strip_prefix(DATASET_MAGIC)
        .ok_or_else(|| perr(1, "missing dataset header".into()))?;
    let mut hash = None;
    let mut n_features = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("config", v)) => hash = Some(v.to_string()),
            Some(("features", v)) => n_features = v.parse::<usize>().ok(),
            Some(("labels", _)) => {}
            _ => return Err(perr(1, format!("unexpected header field {field:?}"))),
        }
    }
    let hash = hash.ok_or_else(|| perr(1, "header lacks config hash".into()))?;
    let n_features = n_features.ok_or_else(|| perr(1, "header lacks feature count".into()))?;

    let mut demos = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_features + 3 {
            return Err(perr(no, format!("expected {} fields, found {}", n_features + 3, fields.len())));
        }
        let episode_id = fields[0].parse::<u64>().map_err(|e| perr(no, e.to_string()))?;
        let features = fields[1..=n_features]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| perr(no, format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let labels = ActionMatrix::from_label_bits(fields[n_features + 1])?;
        let opt_reward = fields[n_features + 2].parse::<f64>().map_err(|e| perr(no, e.to_string()))?;
        demos.push(Demonstration {
            episode_id,
            features,
            labels,
            opt_reward,
        });
    }
    Ok((hash, demos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::fixtures::state;
    use crate::evaluator::{reward, validate_actions};
    use crate::workload::SubTask;

    #[test]
    fn compute_only_space_is_4_pow_6() {
        let task = (0..6)
            .map(|v| SubTask::compute(v, 100_000, 160_000, 100.0, v + 1).unwrap())
            .collect();
        let s = state(task, 300.0);
        assert_eq!(search_space_size(&s), 4096);
        let err = solve_optimal(&s, &PriceVector::default(), 4095).unwrap_err();
        assert!(matches!(err, Error::SearchLimit { size: 4096, limit: 4095 }));
        assert!(solve_optimal(&s, &PriceVector::default(), 4096).is_ok());
    }

    #[test]
    fn single_upload_prefers_no_caching() {
        let s = state(vec![SubTask::upload(0, 300_000).unwrap()], 300.0);
        let prices = PriceVector::default();
        let (a, r) = solve_optimal(&s, &prices, DEFAULT_SEARCH_LIMIT).unwrap();
        assert_eq!(a.label_bits(), "10");
        let r10 = reward(&s, &ActionMatrix::from_label_bits("10").unwrap(), &prices).unwrap();
        let r11 = reward(&s, &ActionMatrix::from_label_bits("11").unwrap(), &prices).unwrap();
        assert_eq!(r10, r11);
        assert_eq!(r, r10);
    }

    #[test]
    fn optimum_beats_every_feasible_matrix() {
        let s = state(
            vec![
                SubTask::compute(0, 400_000, 160_000, 11_000.0, 2).unwrap(),
                SubTask::download(1, 160_000, 3).unwrap(),
                SubTask::compute(2, 100_000, 160_000, 50.0, 4).unwrap(),
                SubTask::upload(3, 200_000).unwrap(),
            ],
            300.0,
        );
        let prices = PriceVector::default();
        let (best, r) = solve_optimal(&s, &prices, DEFAULT_SEARCH_LIMIT).unwrap();
        validate_actions(&s, &best).unwrap();
        assert!((reward(&s, &best, &prices).unwrap() - r).abs() < 1e-12);
        for code in 0..256u32 {
            let pairs: Vec<ActionPair> = (0..4).map(|v| ActionPair::from_code((code >> (2 * (3 - v)) & 3) as u8)).collect();
            let a = ActionMatrix::from_pairs(&pairs);
            if let Ok(other) = reward(&s, &a, &prices) {
                assert!(r <= other);
            }
        }
    }

    #[test]
    fn dataset_round_trip() {
        let mut cfg = Config::default();
        cfg.dataset_size = 5;
        let data = build_dataset(5, 3, &cfg).unwrap();
        let demos: Vec<Demonstration> = data.iter().map(|e| e.demo.clone()).collect();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &cfg.hash(3), &demos).unwrap();
        let (hash, back) = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(hash, cfg.hash(3));
        assert_eq!(back, demos);
        let mut again = Vec::new();
        write_dataset(&mut again, &hash, &back).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn malformed_datasets() {
        assert!(read_dataset("".as_bytes()).is_err());
        assert!(read_dataset("hello\n".as_bytes()).is_err());
        let text = format!("{DATASET_MAGIC} config=ab features=2 labels=2\n0,1,2,10\n");
        assert!(matches!(read_dataset(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
