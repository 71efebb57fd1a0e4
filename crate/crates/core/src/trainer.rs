//! Two-phase training: reconstruction pretraining of the encoder and expert
//! heads on clustered normal data, then alarm and gate training against the
//! data plus Gaussian-noise counterexamples.
//!
//! Encoder and expert parameters are frozen during the detector phase so the
//! activation patterns the alarm learned to read stay fixed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterAssignment;
use crate::datasets::Matrix;
use crate::error::{Error, Result};
use crate::model::ArgueModel;
use crate::nn::{loss, AdamParams, AdamState, NetGrads};

/// RNG stream ids derived from the training seed. The pretraining stream is
/// shared with the baseline autoencoder so both see identical batch orders.
pub(crate) const STREAM_PRETRAIN_SHUFFLE: u64 = 1;
const STREAM_DETECTOR_SHUFFLE: u64 = 2;
const STREAM_DETECTOR_NOISE: u64 = 3;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Unsupervised,
    SemiSupervised,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs_pretrain: usize,
    pub epochs_detector: usize,
    pub batch_size: usize,
    /// Noise samples per real sample in every detector batch.
    pub noise_ratio: f64,
    pub mode: TrainMode,
    pub known_anomaly_budget: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    pub seed: u64,
}

fn default_learning_rate() -> f64 {
    1e-4
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_pretrain == 0 || self.epochs_detector == 0 {
            return Err(Error::Config("epoch counts must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.noise_ratio <= 0.0 {
            return Err(Error::Config("noise_ratio must be > 0".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.mode == TrainMode::Unsupervised && self.known_anomaly_budget != 0 {
            return Err(Error::Config(
                "unsupervised mode cannot carry a known-anomaly budget".into(),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            ..AdamParams::default()
        }
    }
}

/// What a detector-phase training row is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    /// Normal (or believed-normal) sample assigned to expert `j`.
    Normal(usize),
    KnownAnomaly,
    Noise,
}

/// Detector-phase targets: the binary anomaly label and the gating target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPair {
    pub y: f64,
    pub p_target: Vec<f64>,
}

/// Builds the target pair for one sample. Normal samples of cluster `j` get
/// `y = 0` and a one-hot gating target at `j`; noise and known anomalies get
/// `y = 1` and all gating mass on the short-cut entry.
pub fn make_targets(kind: SampleKind, expert_count: usize, mode: TrainMode) -> Result<TargetPair> {
    let mut p_target = vec![0.0; expert_count + 1];
    match kind {
        SampleKind::Normal(j) => {
            if j >= expert_count {
                return Err(Error::Config(format!(
                    "cluster index {j} out of range for {expert_count} experts"
                )));
            }
            p_target[j] = 1.0;
            Ok(TargetPair { y: 0.0, p_target })
        }
        SampleKind::KnownAnomaly => {
            if mode == TrainMode::Unsupervised {
                return Err(Error::Mode(
                    "known anomalies cannot appear in unsupervised training".into(),
                ));
            }
            p_target[expert_count] = 1.0;
            Ok(TargetPair { y: 1.0, p_target })
        }
        SampleKind::Noise => {
            p_target[expert_count] = 1.0;
            Ok(TargetPair { y: 1.0, p_target })
        }
    }
}

/// Gaussian noise with mean 0.5 and standard deviation 1 per dimension, the
/// artificial-counterexample prior. No clipping.
pub fn sample_noise<R: Rng>(dim: usize, count: usize, rng: &mut R) -> Matrix {
    let normal = Normal::new(0.5, 1.0).unwrap();
    let mut out = Matrix::with_cols(dim);
    let mut row = vec![0.0; dim];
    for _ in 0..count {
        for v in row.iter_mut() {
            *v = normal.sample(rng);
        }
        out.push_row(&row);
    }
    out
}

/// Noise samples drawn for one detector batch; at least one, so every batch
/// carries both real and artificial counterexamples.
pub fn noise_count_for(batch_len: usize, noise_ratio: f64) -> usize {
    ((batch_len as f64 * noise_ratio).round() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainEpoch {
    pub epoch: usize,
    /// Mean reconstruction loss over the epoch's samples.
    pub recon_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorEpoch {
    pub epoch: usize,
    pub alarm_loss: f64,
    pub gate_loss: f64,
}

impl DetectorEpoch {
    pub fn composite(&self) -> f64 {
        self.alarm_loss + self.gate_loss
    }
}

/// Pretrains the encoder and expert heads: every sample flows through its
/// assigned expert, the encoder accumulates gradients from all experts in
/// the batch, and each expert only sees its own cluster.
pub fn pretrain(
    model: &mut ArgueModel,
    features: &Matrix,
    assignment: &ClusterAssignment,
    cfg: &TrainConfig,
) -> Result<Vec<PretrainEpoch>> {
    cfg.validate()?;
    assignment.validate()?;
    if assignment.expert_index.len() != features.rows() {
        return Err(Error::Shape(format!(
            "{} assignments for {} rows",
            assignment.expert_index.len(),
            features.rows()
        )));
    }
    if assignment.expert_count != model.expert_count() {
        return Err(Error::Config(format!(
            "assignment has {} clusters but the model has {} experts",
            assignment.expert_count,
            model.expert_count()
        )));
    }
    if features.cols() != model.config.input_dim {
        return Err(Error::Shape(format!(
            "feature width {} vs model input dim {}",
            features.cols(),
            model.config.input_dim
        )));
    }

    let mut rng = stream_rng(cfg.seed, STREAM_PRETRAIN_SHUFFLE);
    let mut enc_state = AdamState::new(&model.encoder, cfg.adam());
    let mut expert_states: Vec<AdamState> = model
        .experts
        .iter()
        .map(|e| AdamState::new(e, cfg.adam()))
        .collect();
    let mut enc_grads = NetGrads::zeros_like(&model.encoder);
    let mut expert_grads: Vec<NetGrads> =
        model.experts.iter().map(NetGrads::zeros_like).collect();

    let mut indices: Vec<usize> = (0..features.rows()).collect();
    let mut log = Vec::with_capacity(cfg.epochs_pretrain);
    for epoch in 0..cfg.epochs_pretrain {
        indices.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in indices.chunks(cfg.batch_size) {
            enc_grads.zero();
            expert_grads.iter_mut().for_each(NetGrads::zero);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let x = features.row(i);
                let j = assignment.expert_index[i];
                let enc_trace = model.encode(x)?;
                let exp_trace = model.experts[j].forward(&enc_trace.output)?;
                loss_sum += loss::mse(x, &exp_trace.output)?;
                let mut d_xhat = vec![0.0; x.len()];
                loss::mse_grad(x, &exp_trace.output, scale, &mut d_xhat);
                model.recon_backward(
                    j,
                    x,
                    &enc_trace,
                    &exp_trace,
                    d_xhat,
                    &mut enc_grads,
                    &mut expert_grads[j],
                );
            }
            enc_state.step(&mut model.encoder, &enc_grads);
            for (expert, (state, grads)) in model
                .experts
                .iter_mut()
                .zip(expert_states.iter_mut().zip(&expert_grads))
            {
                state.step(expert, grads);
            }
        }
        log.push(PretrainEpoch {
            epoch,
            recon_loss: loss_sum / features.rows() as f64,
        });
    }
    Ok(log)
}

/// Trains the alarm and gate against the frozen encoder/expert stack.
///
/// Every batch draws `noise_ratio * batch_len` fresh noise samples. The
/// alarm minimises binary cross-entropy of the fused score on real and noise
/// rows; the gate minimises categorical cross-entropy against its one-hot /
/// short-cut targets. Gradients never reach the encoder or the experts.
pub fn train_detector(
    model: &mut ArgueModel,
    features: &Matrix,
    kinds: &[SampleKind],
    cfg: &TrainConfig,
) -> Result<Vec<DetectorEpoch>> {
    cfg.validate()?;
    if kinds.len() != features.rows() {
        return Err(Error::Shape(format!(
            "{} sample kinds for {} rows",
            kinds.len(),
            features.rows()
        )));
    }
    if features.cols() != model.config.input_dim {
        return Err(Error::Shape(format!(
            "feature width {} vs model input dim {}",
            features.cols(),
            model.config.input_dim
        )));
    }
    let expert_count = model.expert_count();
    // fail fast on a mode violation instead of mid-epoch
    for kind in kinds {
        make_targets(*kind, expert_count, cfg.mode)?;
    }

    let mut shuffle_rng = stream_rng(cfg.seed, STREAM_DETECTOR_SHUFFLE);
    let mut noise_rng = stream_rng(cfg.seed, STREAM_DETECTOR_NOISE);
    let mut alarm_state = AdamState::new(&model.alarm, cfg.adam());
    let mut gate_state = AdamState::new(&model.gate, cfg.adam());
    let mut alarm_grads = NetGrads::zeros_like(&model.alarm);
    let mut gate_grads = NetGrads::zeros_like(&model.gate);

    let dim = model.config.input_dim;
    let mut indices: Vec<usize> = (0..features.rows()).collect();
    let mut log = Vec::with_capacity(cfg.epochs_detector);
    for epoch in 0..cfg.epochs_detector {
        indices.shuffle(&mut shuffle_rng);
        let mut alarm_loss_sum = 0.0;
        let mut gate_loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in indices.chunks(cfg.batch_size) {
            let noise_count = noise_count_for(batch.len(), cfg.noise_ratio);
            let noise = sample_noise(dim, noise_count, &mut noise_rng);

            alarm_grads.zero();
            gate_grads.zero();
            let real_scale = 1.0 / batch.len() as f64;
            let noise_scale = 1.0 / noise_count as f64;

            let step = |model: &ArgueModel,
                            x: &[f64],
                            kind: SampleKind,
                            scale: f64,
                            alarm_grads: &mut NetGrads,
                            gate_grads: &mut NetGrads|
             -> Result<(f64, f64)> {
                let target = make_targets(kind, expert_count, cfg.mode)?;
                let trace = model.score_traced(x)?;

                let alarm_loss = loss::bce(target.y, trace.sample.anomaly_score);
                let d_score = loss::bce_grad(target.y, trace.sample.anomaly_score) * scale;
                model.score_backward_alarm_only(&trace, d_score, alarm_grads);

                let gate_loss = loss::cce(&target.p_target, &trace.gate_trace.output)?;
                let mut d_p = vec![0.0; expert_count + 1];
                loss::cce_grad(&target.p_target, &trace.gate_trace.output, &mut d_p);
                for g in d_p.iter_mut() {
                    *g *= scale;
                }
                model.gate_backward_frozen(&trace, d_p, gate_grads);
                Ok((alarm_loss, gate_loss))
            };

            let mut batch_alarm = 0.0;
            let mut batch_gate = 0.0;
            for &i in batch {
                let (a, g) = step(
                    model,
                    features.row(i),
                    kinds[i],
                    real_scale,
                    &mut alarm_grads,
                    &mut gate_grads,
                )?;
                batch_alarm += a * real_scale;
                batch_gate += g * real_scale;
            }
            for i in 0..noise_count {
                let (a, g) = step(
                    model,
                    noise.row(i),
                    SampleKind::Noise,
                    noise_scale,
                    &mut alarm_grads,
                    &mut gate_grads,
                )?;
                batch_alarm += a * noise_scale;
                batch_gate += g * noise_scale;
            }

            alarm_state.step(&mut model.alarm, &alarm_grads);
            gate_state.step(&mut model.gate, &gate_grads);
            alarm_loss_sum += batch_alarm;
            gate_loss_sum += batch_gate;
            batches += 1;
        }
        log.push(DetectorEpoch {
            epoch,
            alarm_loss: alarm_loss_sum / batches as f64,
            gate_loss: gate_loss_sum / batches as f64,
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_for_normal_samples() {
        let t = make_targets(SampleKind::Normal(2), 4, TrainMode::SemiSupervised).unwrap();
        assert_eq!(t.y, 0.0);
        assert_eq!(t.p_target, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn targets_for_noise_prioritise_the_short_cut() {
        let t = make_targets(SampleKind::Noise, 4, TrainMode::Unsupervised).unwrap();
        assert_eq!(t.y, 1.0);
        assert_eq!(t.p_target, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn known_anomalies_share_the_noise_target() {
        let t = make_targets(SampleKind::KnownAnomaly, 3, TrainMode::SemiSupervised).unwrap();
        let n = make_targets(SampleKind::Noise, 3, TrainMode::SemiSupervised).unwrap();
        assert_eq!(t, n);
    }

    #[test]
    fn known_anomaly_in_unsupervised_mode_is_a_mode_error() {
        assert!(matches!(
            make_targets(SampleKind::KnownAnomaly, 3, TrainMode::Unsupervised),
            Err(Error::Mode(_))
        ));
    }

    #[test]
    fn cluster_index_out_of_range_rejected() {
        assert!(make_targets(SampleKind::Normal(3), 3, TrainMode::Unsupervised).is_err());
    }

    #[test]
    fn unsupervised_config_rejects_budget() {
        let cfg = TrainConfig {
            epochs_pretrain: 1,
            epochs_detector: 1,
            batch_size: 8,
            noise_ratio: 1.0,
            mode: TrainMode::Unsupervised,
            known_anomaly_budget: 5,
            learning_rate: 1e-4,
            seed: 0,
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn every_batch_gets_noise() {
        assert_eq!(noise_count_for(256, 1.0), 256);
        assert_eq!(noise_count_for(10, 0.5), 5);
        assert_eq!(noise_count_for(3, 0.1), 1);
        assert_eq!(noise_count_for(37, 1.0), 37);
    }
}
