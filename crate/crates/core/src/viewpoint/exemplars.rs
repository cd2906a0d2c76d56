/// Greedy temporal non-maximum suppression: repeatedly takes the best-scoring
/// frame at least `min_sep` frames from every earlier pick. Ties go to the
/// earlier frame. Picks are returned in selection order.
pub fn select_exemplars(scores: &[(usize, f64)], min_sep: usize, k: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = scores.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut picks: Vec<usize> = Vec::new();
    for (frame, _) in ranked {
        if picks.len() == k {
            break;
        }
        if picks.iter().all(|&p| p.abs_diff(frame) >= min_sep) {
            picks.push(frame);
        }
    }
    picks
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn indexed(s: &[f64]) -> Vec<(usize, f64)> {
        s.iter().copied().enumerate().collect()
    }

    #[test]
    fn hand_trace() {
        assert_eq!(select_exemplars(&indexed(&[9.0, 1.0, 8.0, 1.0, 7.0]), 2, 3), vec![0, 2, 4]);
        assert_eq!(select_exemplars(&indexed(&[1.0, 5.0, 2.0]), 10, 3), vec![1]);
        assert_eq!(select_exemplars(&indexed(&[0.0, 0.0, 0.0]), 1, 2), vec![0, 1]);
        assert!(select_exemplars(&[], 1, 3).is_empty());
    }

    proptest! {
        #[test]
        fn picks_are_separated(s in prop::collection::vec(0.0f64..1.0, 0..80), sep in 1usize..15, k in 1usize..8) {
            let picks = select_exemplars(&indexed(&s), sep, k);
            prop_assert!(picks.len() <= k);
            for i in 0..picks.len() {
                for j in i + 1..picks.len() {
                    prop_assert!(picks[i].abs_diff(picks[j]) >= sep);
                }
            }
        }
    }
}
