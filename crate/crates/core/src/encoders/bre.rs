use rand::Rng;

use super::uniform;
use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::numerics::{Graph, ParamId, ParamStore, Tensor, Var};

/// Weights of one LSTM direction. Gate blocks are laid out `[i | f | g | o]`
/// along the last axis of `wx: [D, 4h]`, `wh: [h, 4h]` and `b: [4h]`.
#[derive(Clone, Debug)]
pub struct LstmDirection {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
}

/// Bidirectional recurrent encoder: two independent LSTMs, one reading the
/// valid steps forward and one reading them backward.
#[derive(Clone, Debug)]
pub struct Bre {
    input_dim: usize,
    hidden: usize,
    pub fwd: LstmDirection,
    pub bwd: LstmDirection,
}

#[derive(Clone, Copy, Debug)]
pub struct BreOutput {
    /// `[t_max, 2h]`; rows at masked positions are zero.
    pub states: Var,
    /// `[h_fwd at the last valid step ; h_bwd at the first valid step]`.
    pub final_state: Var,
}

impl Bre {
    /// Registers `{prefix}.bre.{fwd,bwd}.{Wx,Wh,b}`. Weights are drawn from
    /// U(-1/√h, 1/√h); the forget-gate bias starts at 1.
    pub fn new(store: &mut ParamStore, prefix: &str, input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut direction = |name: &str| {
            let wx = uniform(rng, &[input_dim, 4 * hidden], bound);
            let wh = uniform(rng, &[hidden, 4 * hidden], bound);
            let mut b = vec![0.0; 4 * hidden];
            b[hidden..2 * hidden].fill(1.0);
            LstmDirection {
                wx: store.add(format!("{prefix}.bre.{name}.Wx"), wx),
                wh: store.add(format!("{prefix}.bre.{name}.Wh"), wh),
                b: store.add(
                    format!("{prefix}.bre.{name}.b"),
                    Tensor::from_parts(vec![4 * hidden], b),
                ),
            }
        };
        let fwd = direction("fwd");
        let bwd = direction("bwd");
        Self {
            input_dim,
            hidden,
            fwd,
            bwd,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Width of each state row, `2h`.
    pub fn output_dim(&self) -> usize {
        2 * self.hidden
    }

    pub fn forward(&self, g: &mut Graph, p: &[Var], x: &FeatureSequence) -> Result<BreOutput> {
        if x.dim() != self.input_dim {
            return Err(Error::shape("bre_forward", &[x.dim()], &[self.input_dim]));
        }
        let n = x.valid_len();
        if n == 0 {
            return Err(Error::EmptyInput("sequence has no valid steps".into()));
        }
        // Only valid rows ever enter the graph.
        let inputs = g.constant(Tensor::from_parts(vec![n, self.input_dim], x.valid_rows().to_vec()));
        let fwd = self.run(g, p, &self.fwd, inputs, (0..n).collect())?;
        let bwd = self.run(g, p, &self.bwd, inputs, (0..n).rev().collect())?;

        let offset = x.first_valid();
        let mut rows = Vec::with_capacity(n);
        for t in 0..n {
            // bwd was produced in reverse order
            let row = g.concat(&[fwd[t], bwd[n - 1 - t]])?;
            rows.push((offset + t, row));
        }
        let states = g.scatter_rows(x.t_max(), self.output_dim(), &rows)?;
        let final_state = g.concat(&[fwd[n - 1], bwd[n - 1]])?;
        Ok(BreOutput { states, final_state })
    }

    /// Runs one direction over `order`, returning hidden states in visit order.
    fn run(&self, g: &mut Graph, p: &[Var], dir: &LstmDirection, inputs: Var, order: Vec<usize>) -> Result<Vec<Var>> {
        let h = self.hidden;
        let wx = p[dir.wx.index()];
        let wh = p[dir.wh.index()];
        let b = p[dir.b.index()];
        let proj = g.matmul(inputs, wx)?;
        let proj = g.add_row(proj, b)?;

        let mut hidden: Option<Var> = None;
        let mut cell: Option<Var> = None;
        let mut out = Vec::with_capacity(order.len());
        for t in order {
            let mut z = g.row(proj, t)?;
            if let Some(prev) = hidden {
                let rec = g.matmul(prev, wh)?;
                z = g.add(z, rec)?;
            }
            let gates = g.sigmoid(z);
            let i = g.slice(gates, 0, h)?;
            let f = g.slice(gates, h, h)?;
            let o = g.slice(gates, 3 * h, h)?;
            let cand = g.slice(z, 2 * h, h)?;
            let cand = g.tanh(cand);
            let write = g.mul(i, cand)?;
            let c = match cell {
                Some(prev) => {
                    let keep = g.mul(f, prev)?;
                    g.add(keep, write)?
                }
                None => write,
            };
            let squashed = g.tanh(c);
            let hv = g.mul(o, squashed)?;
            hidden = Some(hv);
            cell = Some(c);
            out.push(hv);
        }
        Ok(out)
    }
}
