use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::FEATURE_LAYOUT_VERSION;
use crate::error::{Error, Result};

/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` inside the loss.
pub const PROB_CLIP: f64 = 1e-12;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy over the components.
pub fn cross_entropy_loss(probs: &[f64], labels: &[f64]) -> f64 {
    assert_eq!(probs.len(), labels.len(), "probability/label length mismatch");
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    total / probs.len() as f64
}

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.weights[j * self.inputs..(j + 1) * self.inputs]
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Gradients with the same shapes as the model layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            layers: model.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn clear(&mut self) {
        for l in &mut self.layers {
            l.params_mut().for_each(|p| *p = 0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.params_mut().for_each(|p| *p *= factor);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.params().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-layer activations kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Workspace {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    pub fn new(model: &MlpModel) -> Self {
        Workspace {
            activations: model.dims.iter().map(|&d| vec![0.0; d]).collect(),
            delta: Vec::new(),
            delta_prev: Vec::new(),
        }
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("model has layers")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    pub layers: Vec<Dense>,
    pub adam_m: Vec<Dense>,
    pub adam_v: Vec<Dense>,
    pub step_count: u64,
    pub adam: AdamConfig,
    pub seed: u64,
    pub layout_version: u32,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(dims: &[usize], adam: AdamConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(dims, adam)?;
        model.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..=limit);
            }
        }
        Ok(model)
    }

    pub fn zeros(dims: &[usize], adam: AdamConfig) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Domain(format!("invalid layer dims {dims:?}")));
        }
        let layers: Vec<Dense> = dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(MlpModel {
            dims: dims.to_vec(),
            adam_m: layers.clone(),
            adam_v: layers.clone(),
            layers,
            step_count: 0,
            adam,
            seed: 0,
            layout_version: FEATURE_LAYOUT_VERSION,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims non-empty")
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::new(self);
        self.forward_into(x, &mut ws)?;
        Ok(ws.output().to_vec())
    }

    /// Forward pass recording every activation in `ws`.
    pub fn forward_into(&self, x: &[f64], ws: &mut Workspace) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        ws.activations[0].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let (before, after) = ws.activations.split_at_mut(k + 1);
            let input = &before[k];
            let out = &mut after[0];
            for j in 0..layer.outputs {
                let z = layer.bias[j] + dot(layer.row(j), input);
                out[j] = if k == last { sigmoid(z) } else { z.max(0.0) };
            }
        }
        Ok(())
    }

    /// Adds the gradient of the per-sample loss to `grads` and returns the loss.
    pub fn accumulate_gradients(
        &self,
        x: &[f64],
        labels: &[f64],
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> Result<f64> {
        if labels.len() != self.output_dim() {
            return Err(Error::Dimension {
                expected: self.output_dim(),
                got: labels.len(),
            });
        }
        self.forward_into(x, ws)?;
        let probs = ws.activations.last().expect("model has layers");
        let loss = cross_entropy_loss(probs, labels);
        let k = labels.len() as f64;
        // d loss / d logit for sigmoid + mean BCE.
        ws.delta.clear();
        ws.delta.extend(probs.iter().zip(labels).map(|(p, y)| (p - y) / k));

        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let input = &ws.activations[idx];
            let g = &mut grads.layers[idx];
            for j in 0..layer.outputs {
                let d = ws.delta[j];
                if d != 0.0 {
                    axpy(d, input, &mut g.weights[j * layer.inputs..(j + 1) * layer.inputs]);
                    g.bias[j] += d;
                }
            }
            if idx == 0 {
                break;
            }
            ws.delta_prev.clear();
            ws.delta_prev.resize(layer.inputs, 0.0);
            for j in 0..layer.outputs {
                let d = ws.delta[j];
                if d != 0.0 {
                    axpy(d, layer.row(j), &mut ws.delta_prev);
                }
            }
            // ReLU derivative on the hidden pre-activation.
            for (dp, a) in ws.delta_prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *dp = 0.0;
                }
            }
            std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
        Ok(loss)
    }

    /// Loss and exact parameter gradients for one sample.
    pub fn backprop(&self, x: &[f64], labels: &[f64]) -> Result<(f64, Gradients)> {
        let mut ws = Workspace::new(self);
        let mut grads = Gradients::zeros_like(self);
        let loss = self.accumulate_gradients(x, labels, &mut ws, &mut grads)?;
        Ok((loss, grads))
    }

    /// One Adam update with bias-corrected moments.
    pub fn adam_step(&mut self, grads: &Gradients) {
        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.adam;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((layer, m), v), g) in self
            .layers
            .iter_mut()
            .zip(&mut self.adam_m)
            .zip(&mut self.adam_v)
            .zip(&grads.layers)
        {
            for (((p, m), v), &g) in layer.params_mut().zip(m.params_mut()).zip(v.params_mut()).zip(g.params()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }

    pub(crate) fn from_parts(
        dims: Vec<usize>,
        layers: Vec<Dense>,
        adam_m: Vec<Dense>,
        adam_v: Vec<Dense>,
        step_count: u64,
        adam: AdamConfig,
        seed: u64,
        layout_version: u32,
    ) -> Self {
        MlpModel {
            dims,
            layers,
            adam_m,
            adam_v,
            step_count,
            adam,
            seed,
            layout_version,
        }
    }
}
