use super::{EmbedError, EmbeddingVector};
use crate::formats::QuantScheme;

/// Storage types that can be dequantized.
pub trait RawSample: Copy {
    fn widen(self) -> f64;
}

impl RawSample for i8 {
    fn widen(self) -> f64 {
        f64::from(self)
    }
}

impl RawSample for u16 {
    fn widen(self) -> f64 {
        f64::from(self)
    }
}

impl RawSample for f32 {
    fn widen(self) -> f64 {
        f64::from(self)
    }
}

impl RawSample for f64 {
    fn widen(self) -> f64 {
        self
    }
}

/// `Affine`: `scale · (raw − zero_point)`; `Identity`: plain cast.
pub fn dequantize<T: RawSample>(raw: &[T], scheme: &QuantScheme) -> Result<EmbeddingVector, EmbedError> {
    let values = raw
        .iter()
        .map(|&r| match *scheme {
            QuantScheme::Identity => r.widen() as f32,
            QuantScheme::Affine { scale, zero_point } => (scale * (r.widen() - zero_point)) as f32,
        })
        .collect();
    EmbeddingVector::new(values)
}

pub fn dequantize_values(raw: &[f64], scheme: &QuantScheme) -> Result<EmbeddingVector, EmbedError> {
    dequantize(raw, scheme)
}
