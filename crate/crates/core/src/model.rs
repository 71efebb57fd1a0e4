//! The gated multi-expert detector: shared encoder, expert decoder heads,
//! shared alarm network over activation bundles, and a softmax gating network
//! with a short-cut entry wired straight to the output.
//!
//! Widths are fully determined by `encoder_dims`: each expert mirrors the
//! encoder dims reversed and ends in a sigmoid layer of `input_dim`, so every
//! expert path produces an identically shaped activation bundle and one
//! shared alarm network can score them all.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, ForwardTrace, LayerSpec, NetGrads, Network, Taps};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgueConfig {
    pub input_dim: usize,
    pub encoder_dims: Vec<usize>,
    pub expert_count: usize,
    pub alarm_dims: Vec<usize>,
    pub gate_dims: Vec<usize>,
}

impl ArgueConfig {
    /// Config with default alarm/gate hidden widths.
    pub fn new(input_dim: usize, encoder_dims: Vec<usize>, expert_count: usize) -> Self {
        Self {
            input_dim,
            encoder_dims,
            expert_count,
            alarm_dims: vec![32, 16],
            gate_dims: vec![16],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be >= 1".into()));
        }
        if self.encoder_dims.is_empty() {
            return Err(Error::Config("encoder_dims must not be empty".into()));
        }
        if self.encoder_dims.iter().any(|d| *d == 0) {
            return Err(Error::Config("encoder_dims entries must be >= 1".into()));
        }
        if *self.encoder_dims.last().unwrap() >= self.input_dim {
            return Err(Error::Config(format!(
                "latent width {} must be smaller than input_dim {}",
                self.encoder_dims.last().unwrap(),
                self.input_dim
            )));
        }
        if self.expert_count == 0 {
            return Err(Error::Config("expert_count must be >= 1".into()));
        }
        if self.alarm_dims.iter().chain(&self.gate_dims).any(|d| *d == 0) {
            return Err(Error::Config("alarm/gate hidden widths must be >= 1".into()));
        }
        Ok(())
    }

    /// Width of the concatenated encoder activations (all encoder layer
    /// outputs, bottleneck included): the gating network's input.
    pub fn encoder_bundle_width(&self) -> usize {
        self.encoder_dims.iter().sum()
    }

    /// Width of one expert path's activation bundle: encoder activations plus
    /// the expert's hidden activations (reconstruction layer excluded). The
    /// mirrored decoder makes this `2 * encoder_bundle_width` for every
    /// expert, which is what lets one alarm network serve all paths.
    pub fn alarm_input_width(&self) -> usize {
        2 * self.encoder_bundle_width()
    }

    pub(crate) fn encoder_layer_specs(&self) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut prev = self.input_dim;
        for &d in &self.encoder_dims {
            specs.push(LayerSpec {
                input_dim: prev,
                output_dim: d,
                activation: Activation::LeakyRelu,
            });
            prev = d;
        }
        specs
    }

    pub(crate) fn expert_layer_specs(&self) -> Vec<LayerSpec> {
        let latent = *self.encoder_dims.last().unwrap();
        let mut widths: Vec<usize> = self.encoder_dims.iter().rev().cloned().collect();
        widths.push(self.input_dim);
        let mut specs = Vec::new();
        let mut prev = latent;
        for (i, &d) in widths.iter().enumerate() {
            specs.push(LayerSpec {
                input_dim: prev,
                output_dim: d,
                activation: if i + 1 == widths.len() {
                    Activation::Sigmoid
                } else {
                    Activation::LeakyRelu
                },
            });
            prev = d;
        }
        specs
    }

    fn head_specs(&self, input: usize, hidden: &[usize], output: usize, head: Activation) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut prev = input;
        for &d in hidden {
            specs.push(LayerSpec {
                input_dim: prev,
                output_dim: d,
                activation: Activation::LeakyRelu,
            });
            prev = d;
        }
        specs.push(LayerSpec {
            input_dim: prev,
            output_dim: output,
            activation: head,
        });
        specs
    }
}

/// Gate output: expert weights at `0..J-1`, short-cut weight at `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingDistribution(pub Vec<f64>);

impl GatingDistribution {
    pub fn expert_weights(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn short_cut(&self) -> f64 {
        *self.0.last().unwrap()
    }

    /// Index of the most trusted expert (short-cut entry excluded).
    pub fn top_expert(&self) -> usize {
        self.expert_weights()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub expert_scores: Vec<f64>,
    pub gating: GatingDistribution,
    pub anomaly_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgueModel {
    pub config: ArgueConfig,
    pub seed: u64,
    pub encoder: Network,
    pub experts: Vec<Network>,
    pub alarm: Network,
    pub gate: Network,
}

impl ArgueModel {
    /// Instantiates all four network roles with seeded Glorot initialization.
    /// Draw order is encoder, experts in index order, alarm, gate; the
    /// baseline autoencoder replays the first two groups from the same seed.
    pub fn build(config: ArgueConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = Network::init(&config.encoder_layer_specs(), &mut rng)?;
        let experts = (0..config.expert_count)
            .map(|_| Network::init(&config.expert_layer_specs(), &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let alarm = Network::init(
            &config.head_specs(config.alarm_input_width(), &config.alarm_dims, 1, Activation::Sigmoid),
            &mut rng,
        )?;
        let gate = Network::init(
            &config.head_specs(
                config.encoder_bundle_width(),
                &config.gate_dims,
                config.expert_count + 1,
                Activation::Softmax,
            ),
            &mut rng,
        )?;
        Ok(Self {
            config,
            seed,
            encoder,
            experts,
            alarm,
            gate,
        })
    }

    pub fn expert_count(&self) -> usize {
        self.config.expert_count
    }

    /// Encoder forward pass; the trace feeds the gate and every expert path.
    pub fn encode(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.encoder.forward(x)
    }

    /// Concatenated encoder activations in layer order (bottleneck last).
    pub fn encoder_bundle(&self, enc_trace: &ForwardTrace) -> Vec<f64> {
        let mut bundle = Vec::with_capacity(self.config.encoder_bundle_width());
        for h in &enc_trace.hidden_activations {
            bundle.extend_from_slice(h);
        }
        bundle.extend_from_slice(&enc_trace.output);
        bundle
    }

    fn alarm_bundle(&self, enc_trace: &ForwardTrace, exp_trace: &ForwardTrace) -> Vec<f64> {
        let mut bundle = self.encoder_bundle(enc_trace);
        for h in &exp_trace.hidden_activations {
            bundle.extend_from_slice(h);
        }
        bundle
    }

    /// Reconstruction and activation bundle for expert `j`.
    pub fn expert_forward(&self, j: usize, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if j >= self.experts.len() {
            return Err(Error::Config(format!(
                "expert index {j} out of range (expert count {})",
                self.experts.len()
            )));
        }
        let enc_trace = self.encode(x)?;
        let exp_trace = self.experts[j].forward(&enc_trace.output)?;
        let bundle = self.alarm_bundle(&enc_trace, &exp_trace);
        Ok((exp_trace.output, bundle))
    }

    /// Scores one activation bundle with the shared alarm network.
    pub fn alarm_score(&self, bundle: &[f64]) -> Result<f64> {
        Ok(self.alarm.forward(bundle)?.output[0])
    }

    /// Gating distribution over experts plus the short-cut entry.
    pub fn gate_forward(&self, enc_trace: &ForwardTrace) -> Result<GatingDistribution> {
        let bundle = self.encoder_bundle(enc_trace);
        Ok(GatingDistribution(self.gate.forward(&bundle)?.output))
    }

    /// Full fused anomaly score for one input.
    pub fn score(&self, x: &[f64]) -> Result<ScoredSample> {
        Ok(self.score_traced(x)?.sample)
    }

    /// Scores a sample keeping every intermediate trace, so any loss on the
    /// outputs can be backpropagated without recomputation.
    pub fn score_traced(&self, x: &[f64]) -> Result<ScoreTrace> {
        let encoder = self.encode(x)?;
        let mut experts = Vec::with_capacity(self.experts.len());
        let mut alarm_bundles = Vec::with_capacity(self.experts.len());
        let mut alarm_traces = Vec::with_capacity(self.experts.len());
        let mut expert_scores = Vec::with_capacity(self.experts.len());
        for expert in &self.experts {
            let exp_trace = expert.forward(&encoder.output)?;
            let bundle = self.alarm_bundle(&encoder, &exp_trace);
            let alarm_trace = self.alarm.forward(&bundle)?;
            expert_scores.push(alarm_trace.output[0]);
            experts.push(exp_trace);
            alarm_bundles.push(bundle);
            alarm_traces.push(alarm_trace);
        }
        let gate_input = self.encoder_bundle(&encoder);
        let gate_trace = self.gate.forward(&gate_input)?;
        let gating = GatingDistribution(gate_trace.output.clone());

        // y_hat = sum_j p_j * y_j + p_J * 1
        let mut anomaly_score = gating.short_cut();
        for (p, y) in gating.expert_weights().iter().zip(&expert_scores) {
            anomaly_score += p * y;
        }

        Ok(ScoreTrace {
            encoder,
            experts,
            alarm_bundles,
            alarm_traces,
            gate_input,
            gate_trace,
            sample: ScoredSample {
                expert_scores,
                gating,
                anomaly_score,
            },
        })
    }

    // ---- reverse-mode paths -------------------------------------------------

    /// Splits a gradient on the encoder bundle into per-layer taps.
    fn encoder_taps_from_bundle(&self, d_bundle: &[f64], taps: &mut Taps) {
        let mut offset = 0;
        for (l, &width) in self.config.encoder_dims.iter().enumerate() {
            taps.add(l, &d_bundle[offset..offset + width]);
            offset += width;
        }
    }

    /// Backprop of a reconstruction-loss gradient through expert `j` and the
    /// encoder (the pretraining path).
    pub fn recon_backward(
        &self,
        j: usize,
        x: &[f64],
        enc_trace: &ForwardTrace,
        exp_trace: &ForwardTrace,
        d_xhat: Vec<f64>,
        enc_grads: &mut NetGrads,
        exp_grads: &mut NetGrads,
    ) {
        let expert = &self.experts[j];
        let taps = Taps::output_only(expert.layers().len(), d_xhat);
        let d_latent = expert.backward(&enc_trace.output, exp_trace, &taps, exp_grads);

        let enc_layers = self.encoder.layers().len();
        let mut enc_taps = Taps::none(enc_layers);
        enc_taps.set(enc_layers - 1, d_latent);
        self.encoder.backward(x, enc_trace, &enc_taps, enc_grads);
    }

    /// Full-graph backprop of a gradient on expert `j`'s alarm score: through
    /// the alarm, into the expert's hidden activations, and into the encoder
    /// both via the bundle and via the expert's input.
    pub fn expert_alarm_backward(
        &self,
        j: usize,
        x: &[f64],
        trace: &ScoreTrace,
        d_score_j: f64,
        grads: &mut ArgueGrads,
    ) {
        let alarm_layers = self.alarm.layers().len();
        let d_bundle = self.alarm.backward(
            &trace.alarm_bundles[j],
            &trace.alarm_traces[j],
            &Taps::output_only(alarm_layers, vec![d_score_j]),
            &mut grads.alarm,
        );

        let enc_width = self.config.encoder_bundle_width();
        let expert = &self.experts[j];
        let expert_layers = expert.layers().len();
        let mut exp_taps = Taps::none(expert_layers);
        let mut offset = enc_width;
        for (l, layer) in expert.layers().iter().enumerate().take(expert_layers - 1) {
            let width = layer.spec.output_dim;
            exp_taps.add(l, &d_bundle[offset..offset + width]);
            offset += width;
        }
        let d_latent = expert.backward(
            &trace.encoder.output,
            &trace.experts[j],
            &exp_taps,
            &mut grads.experts[j],
        );

        let enc_layers = self.encoder.layers().len();
        let mut enc_taps = Taps::none(enc_layers);
        self.encoder_taps_from_bundle(&d_bundle[..enc_width], &mut enc_taps);
        enc_taps.add(enc_layers - 1, &d_latent);
        self.encoder.backward(x, &trace.encoder, &enc_taps, &mut grads.encoder);
    }

    /// Full-graph backprop of a gradient on the gating distribution, through
    /// the gate and into the encoder.
    pub fn gate_backward(&self, x: &[f64], trace: &ScoreTrace, d_p: Vec<f64>, grads: &mut ArgueGrads) {
        let gate_layers = self.gate.layers().len();
        let d_bundle = self.gate.backward(
            &trace.gate_input,
            &trace.gate_trace,
            &Taps::output_only(gate_layers, d_p),
            &mut grads.gate,
        );
        let enc_layers = self.encoder.layers().len();
        let mut enc_taps = Taps::none(enc_layers);
        self.encoder_taps_from_bundle(&d_bundle, &mut enc_taps);
        self.encoder.backward(x, &trace.encoder, &enc_taps, &mut grads.encoder);
    }

    /// Full-graph backprop of a gradient on the fused anomaly score into
    /// every parameter of every network. Training uses the frozen variants
    /// below; this path exists for gradient verification and analysis.
    pub fn score_backward(&self, x: &[f64], trace: &ScoreTrace, d_score: f64, grads: &mut ArgueGrads) {
        let gating = &trace.sample.gating;
        for j in 0..self.experts.len() {
            self.expert_alarm_backward(j, x, trace, d_score * gating.0[j], grads);
        }
        let mut d_p: Vec<f64> = trace.sample.expert_scores.iter().map(|y| d_score * y).collect();
        d_p.push(d_score);
        self.gate_backward(x, trace, d_p, grads);
    }

    /// Backprop of a gradient on the fused score into the alarm parameters
    /// only; the gating weights act as constants and nothing upstream of the
    /// alarm is touched. This is the detector-phase alarm update.
    pub fn score_backward_alarm_only(&self, trace: &ScoreTrace, d_score: f64, alarm_grads: &mut NetGrads) {
        let alarm_layers = self.alarm.layers().len();
        for j in 0..self.experts.len() {
            let weighted = d_score * trace.sample.gating.0[j];
            if weighted == 0.0 {
                continue;
            }
            self.alarm.backward(
                &trace.alarm_bundles[j],
                &trace.alarm_traces[j],
                &Taps::output_only(alarm_layers, vec![weighted]),
                alarm_grads,
            );
        }
    }

    /// Backprop of a gradient on the gating distribution into the gate
    /// parameters only (detector-phase gate update; encoder stays frozen).
    pub fn gate_backward_frozen(&self, trace: &ScoreTrace, d_p: Vec<f64>, gate_grads: &mut NetGrads) {
        let gate_layers = self.gate.layers().len();
        self.gate.backward(
            &trace.gate_input,
            &trace.gate_trace,
            &Taps::output_only(gate_layers, d_p),
            gate_grads,
        );
    }
}

/// Complete forward state for one scored sample.
pub struct ScoreTrace {
    pub encoder: ForwardTrace,
    pub experts: Vec<ForwardTrace>,
    pub alarm_bundles: Vec<Vec<f64>>,
    pub alarm_traces: Vec<ForwardTrace>,
    pub gate_input: Vec<f64>,
    pub gate_trace: ForwardTrace,
    pub sample: ScoredSample,
}

/// Gradient buffers for every network in the model.
pub struct ArgueGrads {
    pub encoder: NetGrads,
    pub experts: Vec<NetGrads>,
    pub alarm: NetGrads,
    pub gate: NetGrads,
}

impl ArgueGrads {
    pub fn zeros_like(model: &ArgueModel) -> Self {
        Self {
            encoder: NetGrads::zeros_like(&model.encoder),
            experts: model.experts.iter().map(NetGrads::zeros_like).collect(),
            alarm: NetGrads::zeros_like(&model.alarm),
            gate: NetGrads::zeros_like(&model.gate),
        }
    }

    pub fn zero(&mut self) {
        self.encoder.zero();
        self.experts.iter_mut().for_each(NetGrads::zero);
        self.alarm.zero();
        self.gate.zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rand_input(dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    #[test]
    fn declared_widths_for_two_experts() {
        let config = ArgueConfig::new(16, vec![8, 4], 2);
        let model = ArgueModel::build(config, 0).unwrap();
        assert_eq!(model.gate.output_dim(), 3);
        assert_eq!(model.alarm.input_dim(), 24); // (8+4) encoder + (4+8) expert
        assert_eq!(model.gate.input_dim(), 12);
        for expert in &model.experts {
            assert_eq!(expert.input_dim(), 4);
            assert_eq!(expert.output_dim(), 16);
        }
    }

    #[test]
    fn single_expert_is_valid() {
        let model = ArgueModel::build(ArgueConfig::new(10, vec![4], 1), 1).unwrap();
        assert_eq!(model.gate.output_dim(), 2);
        assert_eq!(model.alarm.input_dim(), 8);
    }

    #[test]
    fn deep_tabular_shape_accepted() {
        let config = ArgueConfig::new(49, vec![90, 75, 60, 45, 25, 15], 2);
        assert!(ArgueModel::build(config, 0).is_ok());
    }

    #[test]
    fn invalid_configs_name_the_violation() {
        let err = ArgueModel::build(ArgueConfig::new(8, vec![], 2), 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = ArgueModel::build(ArgueConfig::new(8, vec![8], 2), 0).unwrap_err();
        assert!(err.to_string().contains("latent"));
        let err = ArgueModel::build(ArgueConfig::new(8, vec![4], 0), 0).unwrap_err();
        assert!(err.to_string().contains("expert_count"));
    }

    #[test]
    fn encode_trace_shapes_and_purity() {
        let model = ArgueModel::build(ArgueConfig::new(9, vec![4, 2], 2), 5).unwrap();
        let x = rand_input(9, 1);
        let a = model.encode(&x).unwrap();
        assert_eq!(a.hidden_activations.len(), 1);
        assert_eq!(a.hidden_activations[0].len(), 4);
        assert_eq!(a.output.len(), 2);
        let b = model.encode(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn expert_forward_bundle_layout() {
        let model = ArgueModel::build(ArgueConfig::new(16, vec![8, 4], 2), 9).unwrap();
        let x = rand_input(16, 2);
        let (xhat, bundle) = model.expert_forward(1, &x).unwrap();
        assert_eq!(xhat.len(), 16);
        assert!(xhat.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(bundle.len(), 24);
        // the first segment is exactly the encoder bundle
        let enc = model.encode(&x).unwrap();
        let enc_bundle = model.encoder_bundle(&enc);
        assert_eq!(&bundle[..12], enc_bundle.as_slice());
        // expert index out of range
        assert!(model.expert_forward(2, &x).is_err());
    }

    #[test]
    fn alarm_score_in_unit_interval_and_pure() {
        let model = ArgueModel::build(ArgueConfig::new(12, vec![6, 3], 3), 13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let bundle: Vec<f64> = (0..18).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let s1 = model.alarm_score(&bundle).unwrap();
            let s2 = model.alarm_score(&bundle).unwrap();
            assert!((0.0..=1.0).contains(&s1));
            assert_eq!(s1, s2);
        }
    }

    #[test]
    fn gate_is_a_probability_distribution() {
        let model = ArgueModel::build(ArgueConfig::new(7, vec![5, 3], 4), 21).unwrap();
        for seed in 0..20 {
            let x = rand_input(7, seed);
            let gating = model.gate_forward(&model.encode(&x).unwrap()).unwrap();
            assert_eq!(gating.0.len(), 5);
            let sum: f64 = gating.0.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
            assert!(gating.0.iter().all(|p| *p > 0.0));
        }
    }

    #[test]
    fn score_consistency_identity() {
        let model = ArgueModel::build(ArgueConfig::new(11, vec![6, 3], 3), 33).unwrap();
        for seed in 0..50 {
            let x = rand_input(11, seed);
            let scored = model.score(&x).unwrap();
            let mut expected = scored.gating.short_cut();
            for (p, y) in scored
                .gating
                .expert_weights()
                .iter()
                .zip(&scored.expert_scores)
            {
                expected += p * y;
            }
            assert!((scored.anomaly_score - expected).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&scored.anomaly_score));
        }
    }

    fn force_gate(model: &mut ArgueModel, hot: usize) {
        let last = model.gate.layers_mut().last_mut().unwrap();
        for w in &mut last.weights {
            *w = 0.0;
        }
        for (i, b) in last.biases.iter_mut().enumerate() {
            *b = if i == hot { 500.0 } else { 0.0 };
        }
    }

    #[test]
    fn degenerate_gate_selects_expert_zero() {
        let mut model = ArgueModel::build(ArgueConfig::new(10, vec![5, 2], 3), 44).unwrap();
        force_gate(&mut model, 0);
        let x = rand_input(10, 7);
        let scored = model.score(&x).unwrap();
        assert!((scored.gating.0[0] - 1.0).abs() < 1e-12);
        assert!((scored.anomaly_score - scored.expert_scores[0]).abs() < 1e-100);
    }

    #[test]
    fn saturated_short_cut_forces_score_one() {
        let mut model = ArgueModel::build(ArgueConfig::new(10, vec![5, 2], 3), 44).unwrap();
        force_gate(&mut model, 3);
        let x = rand_input(10, 8);
        let scored = model.score(&x).unwrap();
        assert!((scored.anomaly_score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expert_relabeling_symmetry() {
        // permuting experts together with the gate's output rows leaves the
        // fused score unchanged
        let model = ArgueModel::build(ArgueConfig::new(9, vec![5, 3], 3), 55).unwrap();
        let mut permuted = model.clone();
        let perm = [2usize, 0, 1];
        permuted.experts = perm.iter().map(|&p| model.experts[p].clone()).collect();
        {
            let last = permuted.gate.layers_mut().last_mut().unwrap();
            let orig = model.gate.layers().last().unwrap();
            let in_dim = last.spec.input_dim;
            for (new_row, &old_row) in perm.iter().enumerate() {
                last.weights[new_row * in_dim..(new_row + 1) * in_dim]
                    .copy_from_slice(&orig.weights[old_row * in_dim..(old_row + 1) * in_dim]);
                last.biases[new_row] = orig.biases[old_row];
            }
        }
        for seed in 0..20 {
            let x = rand_input(9, seed);
            let a = model.score(&x).unwrap().anomaly_score;
            let b = permuted.score(&x).unwrap().anomaly_score;
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn shared_alarm_accepts_bundles_from_every_expert() {
        let model = ArgueModel::build(ArgueConfig::new(14, vec![7, 3], 4), 66).unwrap();
        let x = rand_input(14, 9);
        for j in 0..4 {
            let (_, bundle) = model.expert_forward(j, &x).unwrap();
            model.alarm_score(&bundle).unwrap();
        }
    }

    #[test]
    fn build_is_seed_deterministic() {
        let config = ArgueConfig::new(8, vec![4, 2], 2);
        let a = ArgueModel::build(config.clone(), 123).unwrap();
        let b = ArgueModel::build(config, 123).unwrap();
        assert_eq!(a, b);
    }
}
