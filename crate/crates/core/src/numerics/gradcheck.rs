use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Compares reverse-mode gradients of a scalar function against central
/// differences.
///
/// `f` receives a fresh graph and one leaf per input, and must return a
/// scalar node. The result is the maximum over all input coordinates of
/// `|analytic - numeric| / max(1, |analytic|)`. A large error is reported,
/// not raised; errors only come from `f` itself or an out-of-range `eps`.
pub fn gradient_check<F>(f: F, inputs: &[Tensor], eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::Config(format!("eps must lie in (0, 1e-3], got {eps}")));
    }

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let grads = g.backward(out)?;

    let eval = |inputs: &[Tensor]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        Ok(g.value(out).item())
    };

    let mut worst = 0.0f64;
    let mut probe: Vec<Tensor> = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        let analytic = grads.get(vars[i]).expect("leaf gradient populated");
        for j in 0..input.len() {
            let x = input.data()[j];
            // Steps that are exactly representable once added to x.
            let up = (x + eps) - x;
            let down = x - (x - eps);
            let mut data = input.to_vec();
            data[j] = x + up;
            probe[i] = Tensor::from_parts(input.shape().to_vec(), data.clone());
            let plus = eval(&probe)?;
            data[j] = x - down;
            probe[i] = Tensor::from_parts(input.shape().to_vec(), data);
            let minus = eval(&probe)?;
            let numeric = (plus - minus) / (up + down);
            let err = (analytic[j] - numeric).abs() / analytic[j].abs().max(1.0);
            worst = worst.max(err);
        }
        probe[i] = input.clone();
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        // At eps = 1e-3 the rounding of the summed value stays far below 1e-12.
        let x = Tensor::vector(vec![0.3, -1.2, 4.0]).unwrap();
        let err = gradient_check(|g, v| Ok(g.sum(v[0])), &[x], 1e-3).unwrap();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn eps_out_of_range() {
        let x = Tensor::scalar(1.0);
        assert!(gradient_check(|g, v| Ok(g.sum(v[0])), std::slice::from_ref(&x), 0.0).is_err());
        assert!(gradient_check(|g, v| Ok(g.sum(v[0])), &[x], 1e-2).is_err());
    }

    #[test]
    fn reports_wrong_gradient_instead_of_failing() {
        // relu at exactly 0 has a one-sided kink; central differences see slope 0.5.
        let x = Tensor::vector(vec![0.0]).unwrap();
        let err = gradient_check(
            |g, v| {
                let r = g.relu(v[0]);
                Ok(g.sum(r))
            },
            &[x],
            1e-5,
        )
        .unwrap();
        assert!((err - 0.5).abs() < 1e-9);
    }
}
