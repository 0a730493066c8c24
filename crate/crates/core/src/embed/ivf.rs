use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;

use super::search::{check_k, rank, Corpus, Hit, Metric, Query};
use super::vector::squared_l2;
use super::{EmbedError, EmbeddingVector};

pub const MAX_LLOYD_ITERATIONS: usize = 25;
const CONVERGED_SHIFT: f64 = 1e-6;

/// Inverted-file index: k-means partitions the corpus into `nlist` lists and
/// queries scan only the lists whose centroids are nearest.
#[derive(Debug, Clone)]
pub struct IvfIndex {
    corpus: Corpus,
    /// `nlist × dims`, row-major.
    centroids: Vec<f32>,
    /// Corpus positions per list; together they partition `0..corpus.len()`.
    lists: Vec<Vec<usize>>,
    seed: u64,
}

impl IvfIndex {
    pub fn nlist(&self) -> usize {
        self.lists.len()
    }

    pub fn dims(&self) -> usize {
        self.corpus.dims()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn centroid(&self, list: usize) -> &[f32] {
        let d = self.dims();
        &self.centroids[list * d..(list + 1) * d]
    }

    /// Ids in one list, in corpus order.
    pub fn list_ids(&self, list: usize) -> Vec<u64> {
        self.lists[list].iter().map(|&i| self.corpus.id(i)).collect()
    }

    /// Lists ordered by centroid distance to `query`, nearest first.
    fn probe_order(&self, query: &[f32]) -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = (0..self.nlist())
            .map(|l| (squared_l2(query, self.centroid(l)), l))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().map(|(_, l)| l).collect()
    }
}

fn uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Nearest centroid by squared L2, ties to the lower index.
fn nearest(point: &[f32], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d: f64 = point.iter().zip(centroid).map(|(&x, &m)| (f64::from(x) - m).powi(2)).sum();
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(corpus: &Corpus, centroids: &[Vec<f64>]) -> Vec<(usize, f64)> {
    (0..corpus.len()).into_par_iter().map(|i| nearest(corpus.vector(i), centroids)).collect()
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// k-means++ seeding: first centroid uniform, then proportional to squared
/// distance from the nearest chosen centroid.
fn seed_centroids(corpus: &Corpus, nlist: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let n = corpus.len();
    let mut chosen = vec![false; n];
    let first = (rng.next_u64() % n as u64) as usize;
    chosen[first] = true;
    let mut centroids = vec![widen(corpus.vector(first))];
    let mut d2: Vec<f64> = (0..n).map(|i| squared_l2(corpus.vector(i), corpus.vector(first))).collect();

    while centroids.len() < nlist {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = uniform(rng) * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick
        } else {
            None
        };
        // all remaining points coincide with a centroid: take the first unused one
        let pick = pick.or_else(|| chosen.iter().position(|c| !c)).unwrap_or(0);
        chosen[pick] = true;
        let v = corpus.vector(pick);
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(squared_l2(corpus.vector(i), v));
        }
        centroids.push(widen(v));
    }
    centroids
}

/// Moves each empty cluster's centroid onto the point farthest from its own
/// centroid, taking points from clusters that can spare one.
fn reseed_empty(corpus: &Corpus, centroids: &mut [Vec<f64>], assignment: &[(usize, f64)]) -> bool {
    let mut sizes = vec![0usize; centroids.len()];
    for &(c, _) in assignment {
        sizes[c] += 1;
    }
    let empty: Vec<usize> = (0..centroids.len()).filter(|&c| sizes[c] == 0).collect();
    if empty.is_empty() {
        return false;
    }
    let mut by_distance: Vec<usize> = (0..assignment.len()).collect();
    by_distance.sort_by(|&a, &b| assignment[b].1.total_cmp(&assignment[a].1).then(a.cmp(&b)));
    let mut donors = by_distance.into_iter();
    for c in empty {
        for p in donors.by_ref() {
            let owner = assignment[p].0;
            if sizes[owner] > 1 {
                sizes[owner] -= 1;
                sizes[c] += 1;
                centroids[c] = widen(corpus.vector(p));
                break;
            }
        }
    }
    true
}

/// Builds an IVF-flat index with seeded k-means++ and Lloyd refinement.
///
/// Deterministic for a fixed input order and seed. Each vector lands in the
/// list of its nearest final centroid.
pub fn build_ivf(corpus: Corpus, nlist: usize, seed: u64) -> Result<IvfIndex, EmbedError> {
    let n = corpus.len();
    if nlist == 0 {
        return Err(EmbedError::InvalidArgument("nlist must be at least 1".into()));
    }
    if nlist > n {
        return Err(EmbedError::TooFewVectors { nlist, n });
    }
    let mut rng = SplitMix64::from_seed(seed.to_le_bytes());
    let mut centroids = seed_centroids(&corpus, nlist, &mut rng);
    let dims = corpus.dims();

    for _ in 0..MAX_LLOYD_ITERATIONS {
        let assignment = assign(&corpus, &centroids);
        let mut sums = vec![vec![0.0f64; dims]; nlist];
        let mut counts = vec![0usize; nlist];
        for (i, &(c, _)) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, &x) in sums[c].iter_mut().zip(corpus.vector(i)) {
                *s += f64::from(x);
            }
        }
        let mut next = centroids.clone();
        for c in 0..nlist {
            if counts[c] > 0 {
                next[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let reseeded = reseed_empty(&corpus, &mut next, &assignment);
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < CONVERGED_SHIFT && !reseeded {
            break;
        }
    }

    // Final lists come from the stored f32 centroids so probing agrees with assignment.
    let mut stored: Vec<Vec<f64>> =
        centroids.iter().map(|c| c.iter().map(|&x| f64::from(x as f32)).collect()).collect();
    let mut assignment = assign(&corpus, &stored);
    for _ in 0..nlist {
        if !reseed_empty(&corpus, &mut stored, &assignment) {
            break;
        }
        assignment = assign(&corpus, &stored);
    }

    let mut lists = vec![Vec::new(); nlist];
    for (i, &(c, _)) in assignment.iter().enumerate() {
        lists[c].push(i);
    }
    let centroids = stored.iter().flat_map(|c| c.iter().map(|&x| x as f32)).collect();
    Ok(IvfIndex { corpus, centroids, lists, seed })
}

/// Exact scan of the `nprobe` lists with the nearest centroids. Ordering and
/// tie rules match [`topk_search`](super::topk_search).
pub fn search_ivf(
    index: &IvfIndex,
    query: &EmbeddingVector,
    k: usize,
    nprobe: usize,
    metric: Metric,
) -> Result<Vec<Hit>, EmbedError> {
    check_k(k)?;
    if nprobe == 0 || nprobe > index.nlist() {
        return Err(EmbedError::InvalidArgument(format!(
            "nprobe must be in 1..={}, got {nprobe}",
            index.nlist()
        )));
    }
    let q = Query::new(query, index.dims(), metric)?;
    let candidates: Vec<usize> = index
        .probe_order(query.as_slice())
        .into_iter()
        .take(nprobe)
        .flat_map(|l| index.lists[l].iter().copied())
        .collect();
    Ok(rank(&index.corpus, &q, k, &candidates)
        .into_iter()
        .map(|c| Hit { id: c.id, score: c.score })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_corpus(n: usize) -> Corpus {
        let mut c = Corpus::new(2);
        for i in 0..n {
            c.push(i as u64, &[(i % 7) as f32, (i / 7) as f32]).unwrap();
        }
        c
    }

    #[test]
    fn single_list_holds_everything() {
        let idx = build_ivf(grid_corpus(30), 1, 7).unwrap();
        assert_eq!(idx.list_ids(0), (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn one_list_per_vector() {
        let idx = build_ivf(grid_corpus(20), 20, 3).unwrap();
        for l in 0..20 {
            let ids = idx.list_ids(l);
            assert_eq!(ids.len(), 1);
            assert_eq!(idx.centroid(l), idx.corpus().vector(ids[0] as usize));
        }
    }

    #[test]
    fn lists_partition_ids() {
        let idx = build_ivf(grid_corpus(100), 9, 11).unwrap();
        let mut all: Vec<u64> = (0..9).flat_map(|l| idx.list_ids(l)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!((0..9).all(|l| !idx.list_ids(l).is_empty()));
    }

    #[test]
    fn deterministic_for_seed() {
        let a = build_ivf(grid_corpus(60), 5, 42).unwrap();
        let b = build_ivf(grid_corpus(60), 5, 42).unwrap();
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.lists, b.lists);
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(build_ivf(grid_corpus(3), 4, 0), Err(EmbedError::TooFewVectors { nlist: 4, n: 3 })));
        assert!(matches!(build_ivf(grid_corpus(3), 0, 0), Err(EmbedError::InvalidArgument(_))));
        let idx = build_ivf(grid_corpus(10), 2, 0).unwrap();
        let q = EmbeddingVector::new(vec![1.0, 1.0]).unwrap();
        assert!(search_ivf(&idx, &q, 1, 3, Metric::L2).is_err());
        assert!(search_ivf(&idx, &q, 1, 0, Metric::L2).is_err());
    }

    #[test]
    fn splitmix_matches_reference_stream() {
        // first outputs of splitmix64 seeded with 0
        let mut rng = SplitMix64::seed_from_u64(0);
        assert_eq!(rng.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(rng.next_u64(), 0x6e789e6aa1b965f4);
    }
}
