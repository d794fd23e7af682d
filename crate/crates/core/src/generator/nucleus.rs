//! Temperature scaling and nucleus (top-p) truncation.

use rand::Rng;

use super::model::softmax_in_place;

/// Softmax of `logits / temperature`.
pub fn tempered_probabilities(logits: &[f64], temperature: f64) -> Vec<f64> {
    let mut p: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
    softmax_in_place(&mut p);
    p
}

/// Token ids of the nucleus: the shortest prefix of the vocabulary, sorted
/// by descending probability, whose mass reaches `top_p`. Ties keep the lower
/// id first. The argmax is always included.
pub fn nucleus(probs: &[f64], top_p: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut keep = order.len();
    for (rank, &id) in order.iter().enumerate() {
        mass += probs[id];
        if mass >= top_p {
            keep = rank + 1;
            break;
        }
    }
    order.truncate(keep.max(1));
    order
}

/// Draws one token from the renormalized nucleus.
pub fn sample_nucleus<R: Rng + ?Sized>(probs: &[f64], top_p: f64, rng: &mut R) -> usize {
    let kept = nucleus(probs, top_p);
    let total: f64 = kept.iter().map(|&i| probs[i]).sum();
    let mut target = rng.random::<f64>() * total;
    for &id in &kept {
        if target < probs[id] {
            return id;
        }
        target -= probs[id];
    }
    *kept.last().expect("nucleus is never empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn tiny_top_p_is_greedy() {
        let p = [0.1, 0.5, 0.15, 0.25];
        assert_eq!(nucleus(&p, 1e-9), vec![1]);
        let mut rng = seeded(0);
        for _ in 0..50 {
            assert_eq!(sample_nucleus(&p, 1e-9, &mut rng), 1);
        }
    }

    #[test]
    fn full_top_p_keeps_everything() {
        let p = [0.1, 0.5, 0.15, 0.25];
        let mut n = nucleus(&p, 1.0);
        n.sort();
        assert_eq!(n, vec![0, 1, 2, 3]);
    }

    #[test]
    fn boundary_mass_counts_as_reached() {
        let p = [0.5, 0.25, 0.25];
        assert_eq!(nucleus(&p, 0.75), vec![0, 1]);
    }

    #[test]
    fn temperature_sharpens() {
        let logits = [1.0, 2.0, 3.0];
        let cold = tempered_probabilities(&logits, 0.5);
        let warm = tempered_probabilities(&logits, 2.0);
        assert!(cold[2] > warm[2]);
        assert!((cold.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn nucleus_is_minimal_prefix(
            raw in prop::collection::vec(0.001f64..1.0, 1..30),
            top_p in 0.01f64..1.0,
        ) {
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let kept = nucleus(&p, top_p);
            let argmax = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b]).then(b.cmp(&a))).unwrap();
            prop_assert!(kept.contains(&argmax));
            let mass: f64 = kept.iter().map(|&i| p[i]).sum();
            let without_last: f64 = kept[..kept.len() - 1].iter().map(|&i| p[i]).sum();
            prop_assert!(mass >= top_p || kept.len() == p.len());
            prop_assert!(without_last < top_p);
            let min_kept = kept.iter().map(|&i| p[i]).fold(f64::INFINITY, f64::min);
            for (i, &pi) in p.iter().enumerate() {
                if !kept.contains(&i) {
                    prop_assert!(pi <= min_kept);
                }
            }
        }
    }
}
