use super::{axpy, dot, shape_err, LayerError};

/// Fully connected layer `y = W v + b` with `W` of shape `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGradients {
    pub input: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self, LayerError> {
        if weights.len() != inputs * outputs {
            return Err(shape_err("dense", inputs * outputs, weights.len()));
        }
        if bias.len() != outputs {
            return Err(shape_err("dense", outputs, bias.len()));
        }
        Ok(Dense { inputs, outputs, weights, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>, LayerError> {
        if v.len() != self.inputs {
            return Err(shape_err("dense", self.inputs, v.len()));
        }
        let out: Vec<f64> = (0..self.outputs).map(|o| self.bias[o] + dot(self.row(o), v)).collect();
        if out.iter().any(|x| !x.is_finite()) {
            return Err(LayerError::NonFinite { layer: "dense" });
        }
        Ok(out)
    }

    pub fn backward(&self, v: &[f64], upstream: &[f64]) -> Result<DenseGradients, LayerError> {
        if v.len() != self.inputs {
            return Err(shape_err("dense", self.inputs, v.len()));
        }
        if upstream.len() != self.outputs {
            return Err(shape_err("dense", self.outputs, upstream.len()));
        }
        let mut input = vec![0.0; self.inputs];
        let mut weights = vec![0.0; self.weights.len()];
        for (o, &g) in upstream.iter().enumerate() {
            axpy(g, self.row(o), &mut input);
            axpy(g, v, &mut weights[o * self.inputs..(o + 1) * self.inputs]);
        }
        Ok(DenseGradients {
            input,
            weights,
            bias: upstream.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_zero_cases() {
        let mut eye = Dense::zeros(3, 3);
        for i in 0..3 {
            eye.weights[i * 3 + i] = 1.0;
        }
        assert_eq!(eye.forward(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
        let mut biased = Dense::zeros(3, 2);
        biased.bias = vec![0.25, -4.0];
        assert_eq!(biased.forward(&[0.0; 3]).unwrap(), vec![0.25, -4.0]);
        assert!(biased.forward(&[0.0; 2]).is_err());
    }

    #[test]
    fn random_case_matches_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut d = Dense::new(
            8,
            8,
            (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = d.forward(&v).unwrap();
        for o in 0..8 {
            let mut acc = d.bias[o];
            for i in 0..8 {
                acc += d.weights[o * 8 + i] * v[i];
            }
            assert!((acc - out[o]).abs() < 1e-12);
        }
        let probe: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = d.backward(&v, &probe).unwrap();
        let h = 1e-5;
        for i in 0..64 {
            let orig = d.weights[i];
            d.weights[i] = orig + h;
            let plus = dot(&d.forward(&v).unwrap(), &probe);
            d.weights[i] = orig - h;
            let minus = dot(&d.forward(&v).unwrap(), &probe);
            d.weights[i] = orig;
            assert!(((plus - minus) / (2.0 * h) - g.weights[i]).abs() < 1e-8);
        }
        for i in 0..8 {
            let mut vp = v.clone();
            vp[i] += h;
            let mut vm = v.clone();
            vm[i] -= h;
            let fd = (dot(&d.forward(&vp).unwrap(), &probe) - dot(&d.forward(&vm).unwrap(), &probe)) / (2.0 * h);
            assert!((fd - g.input[i]).abs() < 1e-8);
        }
        assert_eq!(g.bias, probe);
    }
}
