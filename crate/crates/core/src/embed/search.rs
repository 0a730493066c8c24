use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

use super::vector::{cosine_from_parts, dot, norm, squared_l2};
use super::{EmbedError, EmbeddingVector};
use crate::formats::PatchRecord;

/// Corpora at least this large are scanned on the rayon pool.
const PARALLEL_MIN: usize = 16 * 1024;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Higher is better.
    #[default]
    Cosine,
    /// Euclidean distance; lower is better.
    L2,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "cos" => Ok(Metric::Cosine),
            "l2" | "euclidean" => Ok(Metric::L2),
            _ => Err(format!("unknown metric {s:?} (expected cosine or l2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hit {
    pub id: u64,
    pub score: f64,
}

/// Dense id-tagged vectors of one dimensionality, stored contiguously.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    dims: usize,
    ids: Vec<u64>,
    data: Vec<f32>,
    norms: Vec<f64>,
}

impl Corpus {
    pub fn new(dims: usize) -> Self {
        Self { dims, ..Default::default() }
    }

    pub fn push(&mut self, id: u64, vector: &[f32]) -> Result<(), EmbedError> {
        if vector.len() != self.dims {
            return Err(EmbedError::DimensionMismatch { expected: self.dims, found: vector.len() });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidVector(format!("vector {id} has non-finite values")));
        }
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        self.norms.push(norm(vector));
        Ok(())
    }

    pub fn from_vectors<'a, I>(items: I) -> Result<Self, EmbedError>
    where
        I: IntoIterator<Item = (u64, &'a [f32])>,
    {
        let mut it = items.into_iter().peekable();
        let dims = it.peek().map_or(0, |(_, v)| v.len());
        let mut corpus = Corpus::new(dims);
        for (id, v) in it {
            corpus.push(id, v)?;
        }
        Ok(corpus)
    }

    pub fn from_patches(patches: &[PatchRecord]) -> Result<Self, EmbedError> {
        Self::from_vectors(patches.iter().map(|p| (p.id, p.embedding.as_slice())))
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, index: usize) -> u64 {
        self.ids[index]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn vector(&self, index: usize) -> &[f32] {
        &self.data[index * self.dims..(index + 1) * self.dims]
    }

    pub(crate) fn score(&self, query: &Query<'_>, index: usize) -> f64 {
        let v = self.vector(index);
        match query.metric {
            Metric::Cosine => cosine_from_parts(dot(query.values, v), query.norm, self.norms[index]),
            Metric::L2 => squared_l2(query.values, v).sqrt(),
        }
    }
}

/// Query vector with its norm precomputed.
pub(crate) struct Query<'a> {
    pub values: &'a [f32],
    pub norm: f64,
    pub metric: Metric,
}

impl<'a> Query<'a> {
    pub fn new(query: &'a EmbeddingVector, dims: usize, metric: Metric) -> Result<Self, EmbedError> {
        if query.dims() != dims {
            return Err(EmbedError::DimensionMismatch { expected: dims, found: query.dims() });
        }
        let n = norm(query.as_slice());
        if metric == Metric::Cosine && n == 0.0 {
            return Err(EmbedError::ZeroVector);
        }
        Ok(Self { values: query.as_slice(), norm: n, metric })
    }
}

/// A scored corpus entry; `Ord` puts better candidates first.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub score: f64,
    pub id: u64,
    pub index: usize,
    higher_is_better: bool,
}

impl Candidate {
    pub fn new(score: f64, id: u64, index: usize, metric: Metric) -> Self {
        Self { score, id, index, higher_is_better: metric == Metric::Cosine }
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_score = if self.higher_is_better {
            other.score.total_cmp(&self.score)
        } else {
            self.score.total_cmp(&other.score)
        };
        by_score.then(self.id.cmp(&other.id)).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Keeps the `k` best candidates seen; the heap top is the worst kept one.
fn select<I: Iterator<Item = usize>>(corpus: &Corpus, query: &Query<'_>, k: usize, indices: I) -> BinaryHeap<Candidate> {
    let mut heap = BinaryHeap::with_capacity(k + 1);
    for i in indices {
        let c = Candidate::new(corpus.score(query, i), corpus.id(i), i, query.metric);
        if heap.len() < k {
            heap.push(c);
        } else if c < *heap.peek().expect("k >= 1") {
            heap.pop();
            heap.push(c);
        }
    }
    heap
}

/// Best `k` of the given corpus positions, best first.
pub(crate) fn rank(corpus: &Corpus, query: &Query<'_>, k: usize, indices: &[usize]) -> Vec<Candidate> {
    let mut best: Vec<Candidate> = if indices.len() >= PARALLEL_MIN {
        indices
            .par_chunks(CHUNK)
            .map(|chunk| select(corpus, query, k, chunk.iter().copied()).into_vec())
            .flatten()
            .collect()
    } else {
        select(corpus, query, k, indices.iter().copied()).into_vec()
    };
    best.sort_unstable();
    best.truncate(k);
    best
}

pub(crate) fn rank_all(corpus: &Corpus, query: &Query<'_>, k: usize) -> Vec<Candidate> {
    if corpus.len() >= PARALLEL_MIN {
        let all: Vec<usize> = (0..corpus.len()).collect();
        rank(corpus, query, k, &all)
    } else {
        let mut best = select(corpus, query, k, 0..corpus.len()).into_vec();
        best.sort_unstable();
        best
    }
}

pub(crate) fn check_k(k: usize) -> Result<(), EmbedError> {
    if k == 0 {
        return Err(EmbedError::InvalidArgument("k must be at least 1".into()));
    }
    Ok(())
}

/// Exact top-`k` by full scan. Cosine ranks by descending similarity, L2 by
/// ascending distance; ties go to the smaller id. Zero-norm corpus vectors
/// score 0 under cosine.
pub fn topk_search(query: &EmbeddingVector, corpus: &Corpus, k: usize, metric: Metric) -> Result<Vec<Hit>, EmbedError> {
    check_k(k)?;
    if corpus.is_empty() {
        return Ok(Vec::new());
    }
    let q = Query::new(query, corpus.dims(), metric)?;
    Ok(rank_all(corpus, &q, k).into_iter().map(|c| Hit { id: c.id, score: c.score }).collect())
}
