use rand::Rng;

use super::glorot;
use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamId, ParamStore, Tensor, Var};

/// Additive attention pooling over encoder states.
///
/// `score_t = context · tanh(W·H_t + b)`, weights are the masked softmax of
/// the scores, and the pooled vector is `Σ_t weight_t · H_t`. The context
/// is either learned (self-attentive pooling) or supplied by the caller
/// (co-attention, where it comes from the other modality).
#[derive(Clone, Debug)]
pub struct Attention {
    input_dim: usize,
    attention_dim: usize,
    pub w: ParamId,
    pub b: ParamId,
    pub context: Option<ParamId>,
}

#[derive(Clone, Copy, Debug)]
pub struct AttentionOutput {
    /// `[t_max]`, zero on masked steps.
    pub weights: Var,
    /// `[input_dim]`
    pub pooled: Var,
}

impl Attention {
    /// Pooling with a learned context vector, registered as `{prefix}.att.c`
    /// and initialised to zero so that pooling starts as a plain mean.
    pub fn self_attentive(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        attention_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let mut att = Self::external(store, prefix, input_dim, attention_dim, rng);
        att.context = Some(store.add(format!("{prefix}.att.c"), Tensor::zeros(&[attention_dim])));
        att
    }

    /// Pooling whose context is passed to [`Attention::attend`].
    pub fn external(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        attention_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let w = store.add(format!("{prefix}.att.W"), glorot(rng, attention_dim, input_dim));
        let b = store.add(format!("{prefix}.att.b"), Tensor::zeros(&[attention_dim]));
        Self {
            input_dim,
            attention_dim,
            w,
            b,
            context: None,
        }
    }

    pub fn attention_dim(&self) -> usize {
        self.attention_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn attend(
        &self,
        g: &mut Graph,
        p: &[Var],
        states: Var,
        mask: &[bool],
        context: Var,
    ) -> Result<AttentionOutput> {
        let ctx_shape = g.value(context).shape().to_vec();
        if ctx_shape != [self.attention_dim] {
            return Err(Error::shape("attend context", &ctx_shape, &[self.attention_dim]));
        }
        let t_max = mask.len();
        let proj = g.matmul_bt(states, p[self.w.index()])?;
        let proj = g.add_row(proj, p[self.b.index()])?;
        let keys = g.tanh(proj);
        let ctx = g.reshape(context, vec![self.attention_dim, 1])?;
        let scores = g.matmul(keys, ctx)?;
        let scores = g.reshape(scores, vec![t_max])?;
        let weights = g.masked_softmax(scores, mask)?;
        let pooled = g.matmul(weights, states)?;
        Ok(AttentionOutput { weights, pooled })
    }

    pub fn self_attentive_pool(&self, g: &mut Graph, p: &[Var], states: Var, mask: &[bool]) -> Result<AttentionOutput> {
        let context = self
            .context
            .ok_or_else(|| Error::Config("attention block has no learned context".into()))?;
        self.attend(g, p, states, mask, p[context.index()])
    }
}
