//! Minimal dense-network engine: traced forward passes, reverse-mode
//! gradients with mid-network taps, losses, and Adam.

pub mod activation;
pub mod adam;
pub mod loss;
pub mod network;

pub use activation::Activation;
pub use adam::{AdamParams, AdamState};
pub use network::{ForwardTrace, Layer, LayerSpec, NetGrads, Network, Taps};
