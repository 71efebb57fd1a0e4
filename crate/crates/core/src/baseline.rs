//! Plain autoencoder baseline: the same encoder/decoder stack as a
//! single-expert model, trained on reconstruction alone, with the
//! reconstruction error as anomaly score.
//!
//! Initialization and the training loop replay the multi-expert pretraining
//! exactly (same seed streams, same batch maths), so a single-expert model
//! and this baseline end up with bitwise-identical parameters under the same
//! seed and config.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Matrix;
use crate::error::{Error, Result};
use crate::model::ArgueConfig;
use crate::nn::{loss, AdamState, NetGrads, Network, Taps};
use crate::trainer::{stream_rng, PretrainEpoch, TrainConfig, STREAM_PRETRAIN_SHUFFLE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeBaseline {
    pub input_dim: usize,
    pub encoder_dims: Vec<usize>,
    pub seed: u64,
    /// Encoder and mirrored decoder merged into one network.
    pub network: Network,
}

impl AeBaseline {
    /// Builds the autoencoder with the same seeded draws as a multi-expert
    /// model: encoder layers first, then the first expert's decoder layers.
    pub fn build(input_dim: usize, encoder_dims: Vec<usize>, seed: u64) -> Result<Self> {
        let config = ArgueConfig::new(input_dim, encoder_dims.clone(), 1);
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut specs = config.encoder_layer_specs();
        specs.extend(config.expert_layer_specs());
        let network = Network::init(&specs, &mut rng)?;
        Ok(Self {
            input_dim,
            encoder_dims,
            seed,
            network,
        })
    }

    /// Reconstruction error as anomaly score; higher is more anomalous.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let trace = self.network.forward(x)?;
        loss::mse(x, &trace.output)
    }
}

/// Minimizes reconstruction MSE with the same optimizer, epoch count, batch
/// schedule, and shuffle stream as multi-expert pretraining.
pub fn train_ae(
    model: &mut AeBaseline,
    features: &Matrix,
    cfg: &TrainConfig,
) -> Result<Vec<PretrainEpoch>> {
    cfg.validate()?;
    if features.cols() != model.input_dim {
        return Err(Error::Shape(format!(
            "feature width {} vs model input dim {}",
            features.cols(),
            model.input_dim
        )));
    }

    let mut rng = stream_rng(cfg.seed, STREAM_PRETRAIN_SHUFFLE);
    let mut state = AdamState::new(&model.network, cfg.adam());
    let mut grads = NetGrads::zeros_like(&model.network);
    let layer_count = model.network.layers().len();

    let mut indices: Vec<usize> = (0..features.rows()).collect();
    let mut log = Vec::with_capacity(cfg.epochs_pretrain);
    for epoch in 0..cfg.epochs_pretrain {
        indices.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in indices.chunks(cfg.batch_size) {
            grads.zero();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let x = features.row(i);
                let trace = model.network.forward(x)?;
                loss_sum += loss::mse(x, &trace.output)?;
                let mut d_xhat = vec![0.0; x.len()];
                loss::mse_grad(x, &trace.output, scale, &mut d_xhat);
                model
                    .network
                    .backward(x, &trace, &Taps::output_only(layer_count, d_xhat), &mut grads);
            }
            state.step(&mut model.network, &grads);
        }
        log.push(PretrainEpoch {
            epoch,
            recon_loss: loss_sum / features.rows() as f64,
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{synth_gaussian_mixture, SynthSpec};
    use crate::trainer::TrainMode;

    fn quick_cfg(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs_pretrain: 5,
            epochs_detector: 1,
            batch_size: 32,
            noise_ratio: 1.0,
            mode: TrainMode::Unsupervised,
            known_anomaly_budget: 0,
            learning_rate: 1e-3,
            seed,
        }
    }

    #[test]
    fn loss_decreases_and_training_is_deterministic() {
        let ds = synth_gaussian_mixture(
            &SynthSpec {
                k_clusters: 1,
                dim: 6,
                n_per_cluster: 200,
                anomaly_count: 0,
                separation: 6.0,
            },
            17,
        )
        .unwrap();
        let scaler = crate::datasets::fit_scale(&ds.features).unwrap();
        let scaled = crate::datasets::apply_scale(&scaler, &ds.features).unwrap();

        let mut a = AeBaseline::build(6, vec![4, 2], 3).unwrap();
        let log_a = train_ae(&mut a, &scaled, &quick_cfg(3)).unwrap();
        assert!(log_a.last().unwrap().recon_loss < log_a[0].recon_loss);

        let mut b = AeBaseline::build(6, vec![4, 2], 3).unwrap();
        train_ae(&mut b, &scaled, &quick_cfg(3)).unwrap();
        assert_eq!(a.network.flat_params(), b.network.flat_params());
    }

    #[test]
    fn score_is_the_reconstruction_mse() {
        let model = AeBaseline::build(3, vec![2], 0).unwrap();
        let x = [0.4, 0.6, 0.5];
        let trace = model.network.forward(&x).unwrap();
        let direct = loss::mse(&x, &trace.output).unwrap();
        assert_eq!(model.score(&x).unwrap(), direct);
        assert!(direct >= 0.0);
        // zero exactly when the reconstruction matches
        assert_eq!(loss::mse(&x, &x).unwrap(), 0.0);
    }
}
