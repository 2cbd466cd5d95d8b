use crate::evaluator::{feasible_actions, ActionMatrix, ActionPair, EpisodeState};

/// Turn per-bit probabilities (offload bits, then cache bits) into a
/// feasible action matrix.
///
/// Each bit is set when its probability exceeds 0.5. A pair outside the
/// sub-task's feasible set is replaced by the feasible pair with the
/// highest joint likelihood, earliest pair first on ties.
pub fn decode_actions(probs: &[f64], state: &EpisodeState) -> ActionMatrix {
    let n = state.task.len();
    assert_eq!(probs.len(), 2 * n, "expected {} probabilities", 2 * n);
    let pairs: Vec<ActionPair> = state
        .task
        .subtasks()
        .iter()
        .enumerate()
        .map(|(v, st)| {
            let (p_of, p_ch) = (probs[v], probs[n + v]);
            let pair = ActionPair::new(p_of > 0.5, p_ch > 0.5);
            let feasible = feasible_actions(st, state);
            if feasible.contains(pair) {
                return pair;
            }
            let likelihood = |p: ActionPair| {
                let a = if p.offload { p_of } else { 1.0 - p_of };
                let b = if p.cache { p_ch } else { 1.0 - p_ch };
                a * b
            };
            let mut best = None;
            for cand in feasible.iter() {
                let l = likelihood(cand);
                match best {
                    Some((_, bl)) if l <= bl => {}
                    _ => best = Some((cand, l)),
                }
            }
            best.expect("feasible sets are never empty").0
        })
        .collect();
    ActionMatrix::from_pairs(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::fixtures::state;
    use crate::evaluator::validate_actions;
    use crate::workload::SubTask;

    #[test]
    fn upload_cases() {
        let s = state(vec![SubTask::upload(0, 100_000).unwrap()], 300.0);
        assert_eq!(decode_actions(&[0.9, 0.2], &s).label_bits(), "10");
        assert_eq!(decode_actions(&[0.1, 0.1], &s).label_bits(), "10");
        assert_eq!(decode_actions(&[0.1, 0.9], &s).label_bits(), "11");
        assert_eq!(decode_actions(&[0.5, 0.5], &s).label_bits(), "10");
    }

    #[test]
    fn compute_in_coverage_passes_through() {
        let s = state(vec![SubTask::compute(0, 100_000, 160_000, 10.0, 2).unwrap()], 300.0);
        assert_eq!(decode_actions(&[0.99, 0.99], &s).label_bits(), "11");
        assert_eq!(decode_actions(&[0.5, 0.5], &s).label_bits(), "00");
    }

    #[test]
    fn forced_cache_is_respected() {
        let s = state(
            vec![
                SubTask::download(0, 160_000, 2).unwrap(),
                SubTask::compute(1, 100_000, 160_000, 10.0, 3).unwrap(),
            ],
            0.5,
        );
        let a = decode_actions(&[0.9, 0.8, 0.1, 0.2], &s);
        validate_actions(&s, &a).unwrap();
        assert_eq!(a.label_bits(), "0111");
    }
}
