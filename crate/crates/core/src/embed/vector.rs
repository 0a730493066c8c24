use serde::{Deserialize, Serialize};

use super::EmbedError;

/// Non-empty vector of finite `f32` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::InvalidVector("embedding has no dimensions".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidVector(format!("value {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(v: Vec<f32>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<EmbeddingVector> for Vec<f32> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Training example for [`knn_classify`](super::knn_classify).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    pub id: u64,
    pub label: u32,
    pub vector: EmbeddingVector,
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

pub(crate) fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn squared_l2(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

fn check_dims(u: &[f32], v: &[f32]) -> Result<(), EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    Ok(())
}

/// `u·v / (‖u‖‖v‖)` accumulated in `f64`.
pub fn cosine_similarity(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    check_dims(u.as_slice(), v.as_slice())?;
    let (nu, nv) = (norm(u.as_slice()), norm(v.as_slice()));
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok(cosine_from_parts(dot(u.as_slice(), v.as_slice()), nu, nv))
}

pub(crate) fn cosine_from_parts(dot: f64, nu: f64, nv: f64) -> f64 {
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

pub fn l2_distance(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    check_dims(u.as_slice(), v.as_slice())?;
    Ok(squared_l2(u.as_slice(), v.as_slice()).sqrt())
}
