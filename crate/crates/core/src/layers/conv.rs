use super::{axpy, dot, shape_err, LayerError, Tensor2D};

/// 1-D convolution without padding.
///
/// Kernel `k` is stored as a flattened `window x in_channels` row, so the
/// receptive field of output position `t` is the contiguous slice of the
/// input starting at row `t * stride`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub window: usize,
    pub stride: usize,
    pub in_channels: usize,
    pub kernels: usize,
    /// `kernels x (window * in_channels)`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGradients {
    pub input: Tensor2D,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// `floor((input_len - window) / stride) + 1`, or `None` when the window does not fit.
pub fn conv_output_len(input_len: usize, window: usize, stride: usize) -> Option<usize> {
    if window == 0 || stride == 0 || input_len < window {
        None
    } else {
        Some((input_len - window) / stride + 1)
    }
}

impl Conv1d {
    pub fn new(
        window: usize,
        stride: usize,
        in_channels: usize,
        kernels: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, LayerError> {
        if window == 0 || stride == 0 || kernels == 0 || in_channels == 0 {
            return Err(shape_err("conv1d", "window, stride, channels and kernels >= 1", format!("w{window} s{stride} c{in_channels} k{kernels}")));
        }
        if weights.len() != kernels * window * in_channels {
            return Err(shape_err("conv1d", kernels * window * in_channels, weights.len()));
        }
        if bias.len() != kernels {
            return Err(shape_err("conv1d", kernels, bias.len()));
        }
        Ok(Conv1d {
            window,
            stride,
            in_channels,
            kernels,
            weights,
            bias,
        })
    }

    pub fn zeros(window: usize, stride: usize, in_channels: usize, kernels: usize) -> Self {
        Conv1d::new(
            window,
            stride,
            in_channels,
            kernels,
            vec![0.0; kernels * window * in_channels],
            vec![0.0; kernels],
        )
        .expect("valid geometry")
    }

    pub fn fan_in(&self) -> usize {
        self.window * self.in_channels
    }

    pub fn kernel(&self, k: usize) -> &[f64] {
        &self.weights[k * self.fan_in()..(k + 1) * self.fan_in()]
    }

    pub fn output_len(&self, input_len: usize) -> Option<usize> {
        conv_output_len(input_len, self.window, self.stride)
    }

    fn check_input(&self, x: &Tensor2D) -> Result<usize, LayerError> {
        if x.cols() != self.in_channels {
            return Err(shape_err("conv1d", format!("{} channels", self.in_channels), format!("{} channels", x.cols())));
        }
        self.output_len(x.rows())
            .ok_or_else(|| shape_err("conv1d", format!(">= {} rows", self.window), x.rows()))
    }

    fn field<'a>(&self, x: &'a Tensor2D, t: usize) -> &'a [f64] {
        let start = t * self.stride * self.in_channels;
        &x.values()[start..start + self.fan_in()]
    }

    pub fn forward(&self, x: &Tensor2D) -> Result<Tensor2D, LayerError> {
        let out_len = self.check_input(x)?;
        let mut out = Vec::with_capacity(out_len * self.kernels);
        for t in 0..out_len {
            let field = self.field(x, t);
            for k in 0..self.kernels {
                out.push(self.bias[k] + dot(self.kernel(k), field));
            }
        }
        let out = Tensor2D::from_raw(out_len, self.kernels, out);
        out.ensure_finite("conv1d")?;
        Ok(out)
    }

    pub fn backward(&self, x: &Tensor2D, upstream: &Tensor2D) -> Result<ConvGradients, LayerError> {
        let out_len = self.check_input(x)?;
        if upstream.rows() != out_len || upstream.cols() != self.kernels {
            return Err(shape_err(
                "conv1d",
                format!("{out_len}x{}", self.kernels),
                format!("{}x{}", upstream.rows(), upstream.cols()),
            ));
        }
        let fan_in = self.fan_in();
        let mut input = Tensor2D::zeros(x.rows(), x.cols());
        let mut weights = vec![0.0; self.weights.len()];
        let mut bias = vec![0.0; self.kernels];
        for t in 0..out_len {
            let field = self.field(x, t);
            let start = t * self.stride * self.in_channels;
            for (k, &g) in upstream.row(t).iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                bias[k] += g;
                axpy(g, field, &mut weights[k * fan_in..(k + 1) * fan_in]);
                axpy(g, self.kernel(k), &mut input.values_mut()[start..start + fan_in]);
            }
        }
        Ok(ConvGradients { input, weights, bias })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_conv(rng: &mut ChaCha8Rng, w: usize, s: usize, c: usize, k: usize) -> Conv1d {
        Conv1d::new(
            w,
            s,
            c,
            k,
            (0..k * w * c).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn production_output_length() {
        assert_eq!(conv_output_len(200_000, 16, 4), Some(49_997));
        assert_eq!(conv_output_len(49_997, 16, 4), Some(12_496));
        assert_eq!(conv_output_len(12_496, 4, 2), Some(6_247));
        assert_eq!(conv_output_len(3, 4, 2), None);
    }

    #[test]
    fn zero_input_yields_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let conv = random_conv(&mut rng, 4, 2, 3, 5);
        let out = conv.forward(&Tensor2D::zeros(20, 3)).unwrap();
        for t in 0..out.rows() {
            assert_eq!(out.row(t), conv.bias.as_slice());
        }
    }

    #[test]
    fn rejects_channel_mismatch() {
        let conv = Conv1d::zeros(4, 2, 3, 5);
        assert!(matches!(conv.forward(&Tensor2D::zeros(20, 2)), Err(LayerError::ShapeMismatch { .. })));
        assert!(conv.forward(&Tensor2D::zeros(3, 3)).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let conv = random_conv(&mut rng, 3, 2, 2, 4);
        let x = Tensor2D::new(11, 2, (0..22).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let g = conv.backward(&x, &Tensor2D::zeros(5, 4)).unwrap();
        assert!(g.input.values().iter().chain(&g.weights).chain(&g.bias).all(|&v| v == 0.0));
    }

    #[test]
    fn unit_upstream_copies_receptive_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let conv = random_conv(&mut rng, 3, 2, 2, 4);
        let x = Tensor2D::new(11, 2, (0..22).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let mut up = Tensor2D::zeros(5, 4);
        up.set(2, 1, 1.0);
        let g = conv.backward(&x, &up).unwrap();
        assert_eq!(&g.weights[6..12], &x.values()[8..14]);
        assert!(g.weights[..6].iter().chain(&g.weights[12..]).all(|&v| v == 0.0));
        assert_eq!(g.bias, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut conv = random_conv(&mut rng, 3, 2, 2, 3);
        let x = Tensor2D::new(9, 2, (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let probe: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loss = |c: &Conv1d, x: &Tensor2D| dot(c.forward(x).unwrap().values(), &probe);
        let up = Tensor2D::new(4, 3, probe.clone()).unwrap();
        let g = conv.backward(&x, &up).unwrap();
        let h = 1e-5;
        for i in 0..conv.weights.len() {
            let orig = conv.weights[i];
            conv.weights[i] = orig + h;
            let plus = loss(&conv, &x);
            conv.weights[i] = orig - h;
            let minus = loss(&conv, &x);
            conv.weights[i] = orig;
            let fd = (plus - minus) / (2.0 * h);
            assert!((fd - g.weights[i]).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
        let mut xm = x.clone();
        for i in 0..x.values().len() {
            let orig = xm.values()[i];
            xm.values_mut()[i] = orig + h;
            let plus = loss(&conv, &xm);
            xm.values_mut()[i] = orig - h;
            let minus = loss(&conv, &xm);
            xm.values_mut()[i] = orig;
            let fd = (plus - minus) / (2.0 * h);
            assert!((fd - g.input.values()[i]).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
    }

    proptest::proptest! {
        #[test]
        fn output_length_counts_whole_windows(len in 1usize..80, window in 1usize..12, stride in 1usize..9) {
            // Count the window start positions directly.
            let starts = (0..len).step_by(stride).filter(|t| t + window <= len).count();
            let layer = random_conv(&mut ChaCha8Rng::seed_from_u64(0), window, stride, 2, 3);
            let out = layer.forward(&Tensor2D::zeros(len, 2));
            if starts == 0 {
                proptest::prop_assert!(out.is_err());
                proptest::prop_assert_eq!(conv_output_len(len, window, stride), None);
            } else {
                proptest::prop_assert_eq!(out.unwrap().rows(), starts);
                proptest::prop_assert_eq!(conv_output_len(len, window, stride), Some(starts));
            }
        }
    }
}
