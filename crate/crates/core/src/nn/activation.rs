//! Element-wise activations plus the softmax head.

use serde::{Deserialize, Serialize};

/// Slope of the negative branch of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Sigmoid,
    Softmax,
    Identity,
}

impl Activation {
    /// Applies the activation to a pre-activation vector in place.
    pub fn apply(self, z: &mut [f64]) {
        match self {
            Activation::LeakyRelu => {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v *= LEAKY_SLOPE;
                    }
                }
            }
            Activation::Sigmoid => {
                for v in z.iter_mut() {
                    *v = sigmoid(*v);
                }
            }
            Activation::Softmax => softmax_in_place(z),
            Activation::Identity => {}
        }
    }

    /// Maps an upstream gradient on the activation output to a gradient on the
    /// pre-activation, using only the activation output itself.
    ///
    /// Every supported activation admits this form: leaky ReLU and sigmoid are
    /// element-wise with output-determined slopes, softmax needs the full
    /// output vector for its Jacobian.
    pub fn backprop(self, output: &[f64], d_output: &[f64], d_z: &mut [f64]) {
        debug_assert_eq!(output.len(), d_output.len());
        debug_assert_eq!(output.len(), d_z.len());
        match self {
            Activation::LeakyRelu => {
                for i in 0..output.len() {
                    let slope = if output[i] > 0.0 { 1.0 } else { LEAKY_SLOPE };
                    d_z[i] = d_output[i] * slope;
                }
            }
            Activation::Sigmoid => {
                for i in 0..output.len() {
                    d_z[i] = d_output[i] * output[i] * (1.0 - output[i]);
                }
            }
            Activation::Softmax => {
                // dz_k = y_k * (g_k - sum_l g_l y_l)
                let dot: f64 = output.iter().zip(d_output).map(|(y, g)| y * g).sum();
                for i in 0..output.len() {
                    d_z[i] = output[i] * (d_output[i] - dot);
                }
            }
            Activation::Identity => d_z.copy_from_slice(d_output),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable softmax.
fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}
