//! Shared building blocks: the bidirectional recurrent encoder and
//! attention pooling.

mod attention;
mod bre;

use rand::Rng;

use crate::numerics::Tensor;

pub use attention::{Attention, AttentionOutput};
pub use bre::{Bre, BreOutput, LstmDirection};

pub(crate) fn uniform(rng: &mut impl Rng, shape: &[usize], bound: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::from_parts(shape.to_vec(), data)
}

/// Glorot-uniform `[fan_in, fan_out]` matrix.
pub(crate) fn glorot(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(rng, &[fan_in, fan_out], bound)
}
