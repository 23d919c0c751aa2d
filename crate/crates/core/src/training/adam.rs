use crate::models::{Gradients, Network};

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
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
    pub fn new(net: &Network, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = net.parameters().iter().map(|p| vec![0.0; p.len()]).collect();
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, net: &mut Network, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in net
            .parameters_mut()
            .into_iter()
            .zip(&grads.blocks)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ArchSpec, ArchitectureId};

    #[test]
    fn first_step_moves_each_parameter_by_lr() {
        // With bias correction the first update is lr * g / (|g| + eps).
        let mut net = Network::build(ArchSpec::miniature(ArchitectureId::A), 0).unwrap();
        let before: Vec<Vec<f64>> = net.parameters().iter().map(|p| p.to_vec()).collect();
        let mut grads = Gradients::zeros_like(&net);
        grads.blocks[0][0] = 2.0;
        grads.blocks[0][1] = -0.5;
        let mut adam = Adam::new(&net, 0.01);
        adam.step(&mut net, &grads);
        let after = net.parameters();
        assert!((before[0][0] - after[0][0] - 0.01).abs() < 1e-9);
        assert!((after[0][1] - before[0][1] - 0.01).abs() < 1e-9);
        assert_eq!(before[0][2], after[0][2]);
    }

    #[test]
    fn small_step_decreases_batch_loss() {
        use crate::models::{ArchSpec, ArchitectureId};
        use rand::{Rng, SeedableRng};
        for (i, arch) in [ArchitectureId::A, ArchitectureId::B, ArchitectureId::C].into_iter().enumerate() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(i as u64);
            let mut net = Network::build(ArchSpec::miniature(arch), 10 + i as u64).unwrap();
            let batch: Vec<Vec<u8>> = (0..6).map(|_| (0..256).map(|_| rng.gen()).collect()).collect();
            let inputs: Vec<&[u8]> = batch.iter().map(Vec::as_slice).collect();
            let targets = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
            let before = net.batch_loss(&inputs, &targets, None, 3).unwrap();
            let (_, grads) = net.clone().loss_and_gradients(&inputs, &targets, None, 3).unwrap();
            let mut adam = Adam::new(&net, 1e-5);
            adam.step(&mut net, &grads);
            let after = net.batch_loss(&inputs, &targets, None, 3).unwrap();
            assert!(after < before, "{arch:?}: {before} -> {after}");
        }
    }
}
