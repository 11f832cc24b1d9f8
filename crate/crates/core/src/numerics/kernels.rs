//! Plain-slice kernels shared by the graph ops and the standalone helpers.

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Matrix product. A 1-D left operand is treated as a single row and the
/// result is 1-D as well.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (sa, sb) = (a.shape(), b.shape());
    let ok = sb.len() == 2 && matches!(sa.len(), 1 | 2) && sa[sa.len() - 1] == sb[0];
    if !ok {
        return Err(Error::shape("matmul", sa, sb));
    }
    let (k, n) = (sb[0], sb[1]);
    let m = a.len() / k;
    let (da, db) = (a.data(), b.data());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            axpy(da[i * k + p], &db[p * n..(p + 1) * n], row);
        }
    }
    let shape = if sa.len() == 1 { vec![n] } else { vec![m, n] };
    Ok(Tensor::from_parts(shape, out))
}

/// Softmax restricted to slots where `mask` is set. Uses max-subtraction;
/// masked slots come out as exactly zero.
pub fn masked_softmax(scores: &Tensor, mask: &[bool]) -> Result<Tensor> {
    if scores.ndim() != 1 || scores.len() != mask.len() {
        return Err(Error::shape("masked_softmax", scores.shape(), &[mask.len()]));
    }
    let x = scores.data();
    let max = x
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateMask);
    }
    let mut out: Vec<f64> = x
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { (v - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= total;
    }
    Ok(Tensor::from_parts(vec![x.len()], out))
}
