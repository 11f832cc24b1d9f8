use rand::Rng;

use crate::encoders::glorot;
use crate::error::Result;
use crate::numerics::{Graph, ParamId, ParamStore, Tensor, Var};

pub const NUM_CLASSES: usize = 7;

/// One ReLU hidden layer followed by a 7-way output layer.
#[derive(Clone, Debug)]
pub struct ClassifierHead {
    input_dim: usize,
    hidden_dim: usize,
    pub hidden_w: ParamId,
    pub hidden_b: ParamId,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

impl ClassifierHead {
    pub fn new(store: &mut ParamStore, prefix: &str, input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let hidden_w = store.add(format!("{prefix}.head.hidden.W"), glorot(rng, input_dim, hidden_dim));
        let hidden_b = store.add(format!("{prefix}.head.hidden.b"), Tensor::zeros(&[hidden_dim]));
        let out_w = store.add(format!("{prefix}.head.out.W"), glorot(rng, hidden_dim, NUM_CLASSES));
        let out_b = store.add(format!("{prefix}.head.out.b"), Tensor::zeros(&[NUM_CLASSES]));
        Self {
            input_dim,
            hidden_dim,
            hidden_w,
            hidden_b,
            out_w,
            out_b,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Returns the logits `[7]`.
    pub fn logits(&self, g: &mut Graph, p: &[Var], x: Var) -> Result<Var> {
        let z = g.matmul(x, p[self.hidden_w.index()])?;
        let z = g.add(z, p[self.hidden_b.index()])?;
        let z = g.relu(z);
        let z = g.matmul(z, p[self.out_w.index()])?;
        g.add(z, p[self.out_b.index()])
    }
}
