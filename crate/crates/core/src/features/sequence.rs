use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Zero-padded, end-aligned `t_max × dim` matrix with a validity mask.
///
/// The `valid_len` populated rows always occupy the tail of the sequence
/// (indices `t_max - valid_len .. t_max`), so the final element of every
/// input lands in the same slot regardless of its length.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    matrix: Vec<f64>,
    mask: Vec<bool>,
    dim: usize,
    valid_len: usize,
}

impl FeatureSequence {
    /// Places the rows of `rows` (flat, row-major, `dim` columns) at the end
    /// of a `t_max`-row matrix. When there are more rows than `t_max`, only
    /// the last `t_max` are kept. `t_max = None` keeps the natural length.
    pub fn end_aligned(rows: &[f64], dim: usize, t_max: Option<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        if !rows.len().is_multiple_of(dim) {
            return Err(Error::shape("end_aligned", &[rows.len()], &[dim]));
        }
        let n = rows.len() / dim;
        if n == 0 {
            return Err(Error::EmptyInput("feature sequence has no frames".into()));
        }
        let t_max = t_max.unwrap_or(n);
        if t_max == 0 {
            return Err(Error::Config("t_max must be positive".into()));
        }
        let valid_len = n.min(t_max);
        let kept = &rows[(n - valid_len) * dim..];
        let pad = t_max - valid_len;
        let mut matrix = vec![0.0; t_max * dim];
        matrix[pad * dim..].copy_from_slice(kept);
        let mut mask = vec![false; t_max];
        mask[pad..].fill(true);
        Ok(Self {
            matrix,
            mask,
            dim,
            valid_len,
        })
    }

    pub fn from_row_vecs(rows: &[Vec<f64>], t_max: Option<usize>) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::EmptyInput("feature sequence has no frames".into()))?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Config("feature rows have unequal widths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::end_aligned(&flat, dim, t_max)
    }

    pub fn t_max(&self) -> usize {
        self.mask.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn valid_len(&self) -> usize {
        self.valid_len
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Index of the first populated row.
    pub fn first_valid(&self) -> usize {
        self.t_max() - self.valid_len
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.matrix[t * self.dim..(t + 1) * self.dim]
    }

    /// The populated rows only, flat.
    pub fn valid_rows(&self) -> &[f64] {
        &self.matrix[self.first_valid() * self.dim..]
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::matrix(self.t_max(), self.dim, self.matrix.clone()).expect("consistent shape")
    }

    /// Re-pads (or truncates, keeping the tail) to a new `t_max`.
    pub fn realigned(&self, t_max: usize) -> Result<Self> {
        Self::end_aligned(self.valid_rows(), self.dim, Some(t_max))
    }

    /// True when the mask and zero-padding invariants hold.
    pub fn is_well_formed(&self) -> bool {
        let pad = self.first_valid();
        self.mask.iter().filter(|&&m| m).count() == self.valid_len
            && self.mask[..pad].iter().all(|&m| !m)
            && self.mask[pad..].iter().all(|&m| m)
            && self.matrix[..pad * self.dim].iter().all(|&v| v == 0.0)
    }

    /// Overwrites every masked row with values from `f`, deliberately
    /// breaking the zero-padding invariant. Encoders never read masked rows,
    /// which is what masking checks use this to demonstrate.
    pub fn fill_padding(&mut self, mut f: impl FnMut() -> f64) {
        let end = self.first_valid() * self.dim;
        for v in &mut self.matrix[..end] {
            *v = f();
        }
    }

    pub(crate) fn from_parts(matrix: Vec<f64>, mask: Vec<bool>, dim: usize) -> Result<Self> {
        let valid_len = mask.iter().filter(|&&m| m).count();
        let seq = Self {
            matrix,
            mask,
            dim,
            valid_len,
        };
        if dim == 0 || seq.matrix.len() != seq.mask.len() * dim || !seq.is_well_formed() {
            return Err(Error::Config("malformed feature sequence record".into()));
        }
        Ok(seq)
    }
}
