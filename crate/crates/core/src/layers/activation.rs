use super::{shape_err, LayerError, Tensor2D};

pub fn relu(x: &Tensor2D) -> Tensor2D {
    let mut out = x.clone();
    relu_in_place(out.values_mut());
    out
}

pub fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Masks `upstream` by `pre > 0`, where `pre` is the ReLU input.
pub fn relu_backward(pre: &Tensor2D, upstream: &Tensor2D) -> Result<Tensor2D, LayerError> {
    if pre.rows() != upstream.rows() || pre.cols() != upstream.cols() {
        return Err(shape_err(
            "relu",
            format!("{}x{}", pre.rows(), pre.cols()),
            format!("{}x{}", upstream.rows(), upstream.cols()),
        ));
    }
    let values = pre
        .values()
        .iter()
        .zip(upstream.values())
        .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
        .collect();
    Ok(Tensor2D::from_raw(pre.rows(), pre.cols(), values))
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_grad(s: f64) -> f64 {
    let p = sigmoid(s);
    p * (1.0 - p)
}

/// `ln(1 + e^s)`, stable for large `|s|`.
pub fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}
