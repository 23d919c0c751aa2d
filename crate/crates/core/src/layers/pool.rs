use super::{LayerError, Tensor2D};

/// Per-channel maxima over all positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub values: Vec<f64>,
    /// Position of each maximum; ties resolve to the smallest position.
    pub argmax: Vec<usize>,
}

pub fn global_max_pool(x: &Tensor2D) -> Result<Pooled, LayerError> {
    if x.rows() == 0 {
        return Err(LayerError::EmptyInput { layer: "global_max_pool" });
    }
    let mut values = x.row(0).to_vec();
    let mut argmax = vec![0usize; x.cols()];
    for t in 1..x.rows() {
        for (c, &v) in x.row(t).iter().enumerate() {
            if v > values[c] {
                values[c] = v;
                argmax[c] = t;
            }
        }
    }
    Ok(Pooled { values, argmax })
}

/// Routes each channel's upstream gradient to its recorded argmax.
pub fn global_max_pool_backward(pooled: &Pooled, rows: usize, upstream: &[f64]) -> Result<Tensor2D, LayerError> {
    if upstream.len() != pooled.values.len() {
        return Err(super::shape_err("global_max_pool", pooled.values.len(), upstream.len()));
    }
    let cols = upstream.len();
    let mut grad = Tensor2D::zeros(rows, cols);
    for (c, (&t, &g)) in pooled.argmax.iter().zip(upstream).enumerate() {
        grad.set(t, c, g);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_channel() {
        let x = Tensor2D::new(4, 1, vec![2.0; 4]).unwrap();
        let p = global_max_pool(&x).unwrap();
        assert_eq!((p.values[0], p.argmax[0]), (2.0, 0));
    }

    #[test]
    fn ties_go_to_first_position() {
        let x = Tensor2D::new(4, 1, vec![1.0, 5.0, 5.0, 2.0]).unwrap();
        let p = global_max_pool(&x).unwrap();
        assert_eq!((p.values[0], p.argmax[0]), (5.0, 1));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(global_max_pool(&Tensor2D::zeros(0, 3)).is_err());
    }

    #[test]
    fn backward_routes_one_unit_per_channel() {
        let x = Tensor2D::new(3, 2, vec![1.0, 9.0, 4.0, 0.0, 3.0, 2.0]).unwrap();
        let p = global_max_pool(&x).unwrap();
        let g = global_max_pool_backward(&p, 3, &[1.0, 1.0]).unwrap();
        assert_eq!(g.values(), &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
    }
}
