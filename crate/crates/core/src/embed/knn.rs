use std::collections::BTreeMap;

use rayon::prelude::*;

use super::search::{check_k, rank_all, Corpus, Metric, Query};
use super::{EmbedError, EmbeddingVector, LabeledVector};

/// Majority label among each query's `k` nearest training vectors.
///
/// Neighbors are chosen with the same ordering as
/// [`topk_search`](super::topk_search); a tied vote goes to the smallest label.
pub fn knn_classify(
    queries: &[EmbeddingVector],
    train: &[LabeledVector],
    k: usize,
    metric: Metric,
) -> Result<Vec<u32>, EmbedError> {
    check_k(k)?;
    if train.is_empty() {
        return Err(EmbedError::InvalidArgument("training set is empty".into()));
    }
    let corpus = Corpus::from_vectors(train.iter().map(|t| (t.id, t.vector.as_slice())))?;
    queries
        .par_iter()
        .map(|q| {
            let query = Query::new(q, corpus.dims(), metric)?;
            let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
            for c in rank_all(&corpus, &query, k) {
                *votes.entry(train[c.index].label).or_default() += 1;
            }
            // max_by_key keeps the last maximum; descending labels make that the smallest
            Ok(votes
                .into_iter()
                .rev()
                .max_by_key(|&(_, n)| n)
                .map(|(label, _)| label)
                .expect("k >= 1 and train non-empty"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(id: u64, label: u32, v: &[f32]) -> LabeledVector {
        LabeledVector { id, label, vector: EmbeddingVector::new(v.to_vec()).unwrap() }
    }

    fn q(v: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn nearest_label() {
        let train = [lv(0, 4, &[0.0, 0.0]), lv(1, 9, &[5.0, 5.0])];
        assert_eq!(knn_classify(&[q(&[5.0, 5.0])], &train, 1, Metric::L2).unwrap(), [9]);
    }

    #[test]
    fn majority() {
        let train = [lv(0, 1, &[0.0]), lv(1, 1, &[0.1]), lv(2, 2, &[0.2]), lv(3, 2, &[9.0]), lv(4, 2, &[9.1])];
        assert_eq!(knn_classify(&[q(&[0.0])], &train, 3, Metric::L2).unwrap(), [1]);
    }

    #[test]
    fn tied_vote_goes_to_smaller_label() {
        let train = [lv(0, 7, &[1.0]), lv(1, 3, &[-1.0])];
        assert_eq!(knn_classify(&[q(&[0.0])], &train, 2, Metric::L2).unwrap(), [3]);
    }

    #[test]
    fn errors() {
        let train = [lv(0, 1, &[1.0, 0.0])];
        assert!(knn_classify(&[q(&[1.0])], &train, 1, Metric::L2).is_err());
        assert!(knn_classify(&[q(&[1.0, 0.0])], &[], 1, Metric::L2).is_err());
        assert!(knn_classify(&[q(&[1.0, 0.0])], &train, 0, Metric::L2).is_err());
    }
}
