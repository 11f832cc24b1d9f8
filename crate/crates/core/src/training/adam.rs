use crate::error::{Error, Result};
use crate::numerics::{ParamStore, Tensor};

/// Adam with bias correction and no weight decay.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update. `grads[i]` belongs to the i-th parameter of
    /// `store` and must have the same length.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Vec<f64>]) -> Result<()> {
        if grads.len() != store.len() {
            return Err(Error::shape("adam step", &[grads.len()], &[store.len()]));
        }
        if self.m.is_empty() {
            self.m = store.values().iter().map(|t| vec![0.0; t.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let ids: Vec<_> = store.ids().collect();
        for (k, id) in ids.into_iter().enumerate() {
            let value = store.get(id);
            let g = &grads[k];
            if g.len() != value.len() {
                return Err(Error::shape("adam step", &[g.len()], value.shape()));
            }
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let mut next = value.to_vec();
            for j in 0..next.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                next[j] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
            let shape = value.shape().to_vec();
            store.set(id, Tensor::new(shape, next)?)?;
        }
        Ok(())
    }
}
