//! Dense feed-forward networks with full activation traces and reverse-mode
//! gradients.
//!
//! The forward pass records every hidden activation so downstream consumers
//! can analyse them; the backward pass accepts gradients injected at any
//! layer output ("taps"), which is what lets a loss defined on those hidden
//! activations flow back into the producing network.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::activation::Activation;

/// Shape and activation of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

/// One dense layer, `y = activation(W x + b)`, weights row-major `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(spec: LayerSpec, rng: &mut R) -> Self {
        let limit = (6.0 / (spec.input_dim + spec.output_dim) as f64).sqrt();
        let weights = (0..spec.input_dim * spec.output_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Self {
            spec,
            weights,
            biases: vec![0.0; spec.output_dim],
        }
    }

    fn forward(&self, input: &[f64], output: &mut Vec<f64>) {
        output.clear();
        for o in 0..self.spec.output_dim {
            let row = &self.weights[o * self.spec.input_dim..(o + 1) * self.spec.input_dim];
            let mut sum = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                sum += w * x;
            }
            output.push(sum);
        }
        self.spec.activation.apply(output);
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to this layer's input.
    fn backward(
        &self,
        input: &[f64],
        output: &[f64],
        d_output: &[f64],
        grads: &mut LayerGrads,
    ) -> Vec<f64> {
        let mut d_z = vec![0.0; self.spec.output_dim];
        self.spec.activation.backprop(output, d_output, &mut d_z);

        let mut d_input = vec![0.0; self.spec.input_dim];
        for o in 0..self.spec.output_dim {
            let dz = d_z[o];
            grads.d_biases[o] += dz;
            let row = o * self.spec.input_dim;
            for i in 0..self.spec.input_dim {
                grads.d_weights[row + i] += dz * input[i];
                d_input[i] += self.weights[row + i] * dz;
            }
        }
        d_input
    }
}

/// Output of a forward pass: the final activation plus every hidden
/// activation (one vector per non-final layer, in layer order).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub output: Vec<f64>,
    pub hidden_activations: Vec<Vec<f64>>,
}

/// A chain of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    /// Builds a seeded network from layer specs.
    ///
    /// Softmax is only valid on the final layer, and consecutive layer dims
    /// must chain.
    pub fn init<R: Rng>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        Self::validate_specs(specs)?;
        let layers = specs.iter().map(|s| Layer::init(*s, rng)).collect();
        Ok(Self { layers })
    }

    /// Stitches pre-built layers into a network (used when merging trained
    /// sub-networks); the same spec invariants apply.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        Self::validate_specs(&specs)?;
        Ok(Self { layers })
    }

    fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
        if specs.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (i, s) in specs.iter().enumerate() {
            if s.input_dim == 0 || s.output_dim == 0 {
                return Err(Error::Config(format!("layer {i} has a zero dimension")));
            }
            if s.activation == Activation::Softmax && i + 1 != specs.len() {
                return Err(Error::Config(format!(
                    "softmax only permitted on the final layer, found on layer {i}"
                )));
            }
        }
        for w in specs.windows(2) {
            if w[0].output_dim != w[1].input_dim {
                return Err(Error::Config(format!(
                    "layer dims do not chain: {} -> {}",
                    w[0].output_dim, w[1].input_dim
                )));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().spec.output_dim
    }

    /// Sum of all layer output widths; the width of [`Self::forward`]'s full
    /// activation stack.
    pub fn total_activation_width(&self) -> usize {
        self.layers.iter().map(|l| l.spec.output_dim).sum()
    }

    /// Forward pass recording all hidden activations.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input width {} does not match network input dim {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut current = x;
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.spec.output_dim);
            layer.forward(current, &mut out);
            outputs.push(out);
            current = outputs.last().unwrap();
        }
        let output = outputs.pop().unwrap();
        Ok(ForwardTrace {
            output,
            hidden_activations: outputs,
        })
    }

    /// Reverse-mode pass. `taps[i]` is the loss gradient injected directly at
    /// layer i's post-activation output (the final tap is the gradient on the
    /// network output). Parameter gradients accumulate into `grads`; the
    /// return value is the loss gradient with respect to the network input.
    pub fn backward(&self, x: &[f64], trace: &ForwardTrace, taps: &Taps, grads: &mut NetGrads) -> Vec<f64> {
        assert_eq!(taps.0.len(), self.layers.len(), "one tap slot per layer");
        assert_eq!(grads.layers.len(), self.layers.len());

        let mut d_out: Vec<f64> = vec![0.0; self.output_dim()];
        for l in (0..self.layers.len()).rev() {
            if let Some(tap) = &taps.0[l] {
                assert_eq!(tap.len(), d_out.len(), "tap width mismatch at layer {l}");
                for (d, t) in d_out.iter_mut().zip(tap) {
                    *d += t;
                }
            }
            let input: &[f64] = if l == 0 {
                x
            } else {
                &trace.hidden_activations[l - 1]
            };
            let output: &[f64] = if l + 1 == self.layers.len() {
                &trace.output
            } else {
                &trace.hidden_activations[l]
            };
            d_out = self.layers[l].backward(input, output, &d_out, &mut grads.layers[l]);
        }
        d_out
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Flat view of all parameters, weights then biases per layer. Used by
    /// finite-difference checks and bitwise comparisons.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut offset = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
    }
}

/// Per-layer gradient buffers matching a [`Layer`]'s parameter shapes.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub d_weights: Vec<f64>,
    pub d_biases: Vec<f64>,
}

/// Gradient buffers for a whole network.
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub layers: Vec<LayerGrads>,
}

impl NetGrads {
    pub fn zeros_like(net: &Network) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerGrads {
                d_weights: vec![0.0; l.weights.len()],
                d_biases: vec![0.0; l.biases.len()],
            })
            .collect();
        Self { layers }
    }

    pub fn zero(&mut self) {
        for l in &mut self.layers {
            l.d_weights.iter_mut().for_each(|v| *v = 0.0);
            l.d_biases.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.d_weights);
            out.extend_from_slice(&l.d_biases);
        }
        out
    }
}

/// Gradients injected at layer outputs during [`Network::backward`].
pub struct Taps(Vec<Option<Vec<f64>>>);

impl Taps {
    pub fn none(layer_count: usize) -> Self {
        Self((0..layer_count).map(|_| None).collect())
    }

    /// Single gradient on the network output: the ordinary backprop case.
    pub fn output_only(layer_count: usize, d_output: Vec<f64>) -> Self {
        let mut taps = Self::none(layer_count);
        taps.set(layer_count - 1, d_output);
        taps
    }

    pub fn set(&mut self, layer: usize, grad: Vec<f64>) {
        self.0[layer] = Some(grad);
    }

    /// Adds into an existing tap (or installs it).
    pub fn add(&mut self, layer: usize, grad: &[f64]) {
        match &mut self.0[layer] {
            Some(existing) => {
                assert_eq!(existing.len(), grad.len());
                for (e, g) in existing.iter_mut().zip(grad) {
                    *e += g;
                }
            }
            None => self.0[layer] = Some(grad.to_vec()),
        }
    }
}
