//! Finite-difference verification of every reverse-mode path: plain
//! networks under each loss head, the encoder->expert reconstruction chain,
//! the encoder->expert->alarm chain, the encoder->gate chain, and the fully
//! fused score.

use argue_core::model::{ArgueConfig, ArgueGrads, ArgueModel};
use argue_core::nn::{loss, Activation, LayerSpec, NetGrads, Network, Taps};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn assert_grad(analytic: f64, numeric: f64, what: &str) {
    let rel = (analytic - numeric).abs() / numeric.abs().max(1.0);
    assert!(
        rel < REL_TOL,
        "{what}: analytic {analytic} vs finite-difference {numeric} (rel {rel})"
    );
}

/// Central finite differences of `loss_fn` against every parameter of `net`.
fn check_network<L: Fn(&Network) -> f64>(net: &Network, analytic: &NetGrads, loss_fn: L, what: &str) {
    let flat = analytic.flat();
    let params = net.flat_params();
    let mut probe = net.clone();
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus[i] += FD_STEP;
        probe.set_flat_params(&plus);
        let up = loss_fn(&probe);
        let mut minus = params.clone();
        minus[i] -= FD_STEP;
        probe.set_flat_params(&minus);
        let down = loss_fn(&probe);
        let numeric = (up - down) / (2.0 * FD_STEP);
        assert_grad(flat[i], numeric, &format!("{what} param {i}"));
    }
}

#[test]
fn plain_network_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let specs = [
        LayerSpec {
            input_dim: 5,
            output_dim: 4,
            activation: Activation::LeakyRelu,
        },
        LayerSpec {
            input_dim: 4,
            output_dim: 1,
            activation: Activation::Sigmoid,
        },
    ];
    let net = Network::init(&specs, &mut rng).unwrap();
    let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let trace = net.forward(&x).unwrap();
    let mut grads = NetGrads::zeros_like(&net);
    let d_out = vec![loss::bce_grad(1.0, trace.output[0])];
    net.backward(&x, &trace, &Taps::output_only(2, d_out), &mut grads);

    check_network(
        &net,
        &grads,
        |n| loss::bce(1.0, n.forward(&x).unwrap().output[0]),
        "bce through sigmoid net",
    );
}

#[test]
fn bce_gradient_at_sigmoid_preactivation_is_prediction_minus_target() {
    // single sigmoid unit: d bce / d z == y_hat - y
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = Network::init(
        &[LayerSpec {
            input_dim: 1,
            output_dim: 1,
            activation: Activation::Sigmoid,
        }],
        &mut rng,
    )
    .unwrap();
    for &(x, y) in &[(0.3, 1.0), (-0.8, 0.0), (1.7, 1.0)] {
        let trace = net.forward(&[x]).unwrap();
        let y_hat = trace.output[0];
        let mut grads = NetGrads::zeros_like(&net);
        net.backward(
            &[x],
            &trace,
            &Taps::output_only(1, vec![loss::bce_grad(y, y_hat)]),
            &mut grads,
        );
        // d loss / d bias == d loss / d z
        let d_z = grads.layers[0].d_biases[0];
        assert!((d_z - (y_hat - y)).abs() < 1e-12);
    }
}

#[test]
fn softmax_cce_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let specs = [
        LayerSpec {
            input_dim: 4,
            output_dim: 6,
            activation: Activation::LeakyRelu,
        },
        LayerSpec {
            input_dim: 6,
            output_dim: 3,
            activation: Activation::Softmax,
        },
    ];
    let net = Network::init(&specs, &mut rng).unwrap();
    let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let target = [0.2, 0.5, 0.3];

    let trace = net.forward(&x).unwrap();
    let mut d_out = vec![0.0; 3];
    loss::cce_grad(&target, &trace.output, &mut d_out);
    let mut grads = NetGrads::zeros_like(&net);
    net.backward(&x, &trace, &Taps::output_only(2, d_out), &mut grads);

    check_network(
        &net,
        &grads,
        |n| loss::cce(&target, &n.forward(&x).unwrap().output).unwrap(),
        "cce through softmax net",
    );
}

fn small_model(seed: u64) -> (ArgueModel, Vec<f64>) {
    let config = ArgueConfig {
        input_dim: 7,
        encoder_dims: vec![5, 3],
        expert_count: 2,
        alarm_dims: vec![6],
        gate_dims: vec![4],
    };
    let model = ArgueModel::build(config, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let x: Vec<f64> = (0..7).map(|_| rng.gen_range(0.0..1.0)).collect();
    (model, x)
}

/// Swaps one network role of the model through a closure-driven FD check.
fn check_role<G, L>(model: &ArgueModel, role: G, analytic: &NetGrads, loss_fn: L, what: &str)
where
    G: Fn(&mut ArgueModel) -> &mut Network,
    L: Fn(&ArgueModel) -> f64,
{
    let mut probe = model.clone();
    let params = role(&mut probe).flat_params();
    let flat = analytic.flat();
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus[i] += FD_STEP;
        role(&mut probe).set_flat_params(&plus);
        let up = loss_fn(&probe);
        let mut minus = params.clone();
        minus[i] -= FD_STEP;
        role(&mut probe).set_flat_params(&minus);
        let down = loss_fn(&probe);
        role(&mut probe).set_flat_params(&params);
        let numeric = (up - down) / (2.0 * FD_STEP);
        assert_grad(flat[i], numeric, &format!("{what} param {i}"));
    }
}

#[test]
fn reconstruction_chain_gradients_match_finite_differences() {
    let (model, x) = small_model(81);
    let j = 1;
    let enc_trace = model.encode(&x).unwrap();
    let exp_trace = model.experts[j].forward(&enc_trace.output).unwrap();
    let mut d_xhat = vec![0.0; x.len()];
    loss::mse_grad(&x, &exp_trace.output, 1.0, &mut d_xhat);
    let mut enc_grads = NetGrads::zeros_like(&model.encoder);
    let mut exp_grads = NetGrads::zeros_like(&model.experts[j]);
    model.recon_backward(j, &x, &enc_trace, &exp_trace, d_xhat, &mut enc_grads, &mut exp_grads);

    let loss_fn = |m: &ArgueModel| {
        let enc = m.encode(&x).unwrap();
        let exp = m.experts[j].forward(&enc.output).unwrap();
        loss::mse(&x, &exp.output).unwrap()
    };
    check_role(&model, |m| &mut m.encoder, &enc_grads, loss_fn, "recon encoder");
    check_role(&model, |m| &mut m.experts[1], &exp_grads, loss_fn, "recon expert");
}

#[test]
fn expert_alarm_chain_gradients_match_finite_differences() {
    let (model, x) = small_model(82);
    let j = 0;
    let trace = model.score_traced(&x).unwrap();
    let y_j = trace.sample.expert_scores[j];
    let mut grads = ArgueGrads::zeros_like(&model);
    model.expert_alarm_backward(j, &x, &trace, loss::bce_grad(1.0, y_j), &mut grads);

    let loss_fn = |m: &ArgueModel| {
        let enc = m.encode(&x).unwrap();
        let exp = m.experts[j].forward(&enc.output).unwrap();
        let mut bundle = m.encoder_bundle(&enc);
        for h in &exp.hidden_activations {
            bundle.extend_from_slice(h);
        }
        loss::bce(1.0, m.alarm_score(&bundle).unwrap())
    };
    check_role(&model, |m| &mut m.alarm, &grads.alarm, loss_fn, "alarm");
    check_role(&model, |m| &mut m.experts[0], &grads.experts[0], loss_fn, "expert via alarm");
    check_role(&model, |m| &mut m.encoder, &grads.encoder, loss_fn, "encoder via alarm");
}

#[test]
fn gate_chain_gradients_match_finite_differences() {
    let (model, x) = small_model(83);
    let target = [0.0, 1.0, 0.0];
    let trace = model.score_traced(&x).unwrap();
    let mut d_p = vec![0.0; 3];
    loss::cce_grad(&target, &trace.gate_trace.output, &mut d_p);
    let mut grads = ArgueGrads::zeros_like(&model);
    model.gate_backward(&x, &trace, d_p, &mut grads);

    let loss_fn = |m: &ArgueModel| {
        let gating = m.gate_forward(&m.encode(&x).unwrap()).unwrap();
        loss::cce(&target, &gating.0).unwrap()
    };
    check_role(&model, |m| &mut m.gate, &grads.gate, loss_fn, "gate");
    check_role(&model, |m| &mut m.encoder, &grads.encoder, loss_fn, "encoder via gate");
}

#[test]
fn fused_score_gradients_match_finite_differences() {
    let (model, x) = small_model(84);
    let trace = model.score_traced(&x).unwrap();
    let mut grads = ArgueGrads::zeros_like(&model);
    model.score_backward(&x, &trace, loss::bce_grad(0.0, trace.sample.anomaly_score), &mut grads);

    let loss_fn =
        |m: &ArgueModel| loss::bce(0.0, m.score(&x).unwrap().anomaly_score);
    check_role(&model, |m| &mut m.alarm, &grads.alarm, loss_fn, "fused alarm");
    check_role(&model, |m| &mut m.gate, &grads.gate, loss_fn, "fused gate");
    check_role(&model, |m| &mut m.experts[0], &grads.experts[0], loss_fn, "fused expert 0");
    check_role(&model, |m| &mut m.experts[1], &grads.experts[1], loss_fn, "fused expert 1");
    check_role(&model, |m| &mut m.encoder, &grads.encoder, loss_fn, "fused encoder");
}

#[test]
fn detector_phase_gradients_leave_frozen_networks_untouched() {
    let (model, x) = small_model(85);
    let trace = model.score_traced(&x).unwrap();

    let mut alarm_grads = NetGrads::zeros_like(&model.alarm);
    model.score_backward_alarm_only(&trace, loss::bce_grad(1.0, trace.sample.anomaly_score), &mut alarm_grads);
    // the alarm-only path must agree with the full path's alarm component
    let mut full = ArgueGrads::zeros_like(&model);
    let d_score = loss::bce_grad(1.0, trace.sample.anomaly_score);
    for j in 0..2 {
        model.expert_alarm_backward(j, &x, &trace, d_score * trace.sample.gating.0[j], &mut full);
    }
    for (a, b) in alarm_grads.flat().iter().zip(full.alarm.flat().iter()) {
        assert!((a - b).abs() < 1e-15);
    }
}
