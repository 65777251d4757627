//! Published full-scale benchmark configurations, shipped as reference data.
//!
//! These describe the training setups used on the standard benchmark suites
//! (ZINC, MNIST, CIFAR10, PATTERN, CLUSTER, the peptide long-range tasks, and
//! PCQM4Mv2). They are documentation: nothing in this crate trains at that
//! scale, and no check depends on reproducing those benchmark numbers. The
//! desk-scale experiments in [`crate::synth`] use their own [`crate::synth::SynthConfig`].

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Sum,
    Mean,
    /// Node-level prediction tasks pool nothing.
    None,
}

/// One benchmark's hyperparameters.
#[derive(Debug, Clone, Serialize)]
pub struct HparamPreset {
    pub dataset: &'static str,
    pub transformer_layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub dropout: f64,
    pub attention_dropout: f64,
    pub pooling: Pooling,
    /// Walk length bound K of the positional encoding.
    pub walk_length: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub weight_decay: f64,
    pub parameter_count: usize,
}

/// All published presets.
pub fn benchmark_presets() -> Vec<HparamPreset> {
    vec![
        HparamPreset {
            dataset: "zinc",
            transformer_layers: 10,
            hidden_dim: 64,
            heads: 8,
            dropout: 0.0,
            attention_dropout: 0.2,
            pooling: Pooling::Sum,
            walk_length: 21,
            batch_size: 32,
            learning_rate: 1e-3,
            epochs: 2000,
            warmup_epochs: 50,
            weight_decay: 1e-5,
            parameter_count: 473_473,
        },
        HparamPreset {
            dataset: "zinc-full",
            transformer_layers: 10,
            hidden_dim: 64,
            heads: 8,
            dropout: 0.0,
            attention_dropout: 0.2,
            pooling: Pooling::Sum,
            walk_length: 21,
            batch_size: 256,
            learning_rate: 1e-3,
            epochs: 2000,
            warmup_epochs: 50,
            weight_decay: 1e-5,
            parameter_count: 473_473,
        },
        HparamPreset {
            dataset: "mnist",
            transformer_layers: 3,
            hidden_dim: 52,
            heads: 4,
            dropout: 0.0,
            attention_dropout: 0.5,
            pooling: Pooling::Mean,
            walk_length: 18,
            batch_size: 16,
            learning_rate: 1e-3,
            epochs: 200,
            warmup_epochs: 5,
            weight_decay: 1e-5,
            parameter_count: 102_138,
        },
        HparamPreset {
            dataset: "cifar10",
            transformer_layers: 3,
            hidden_dim: 52,
            heads: 4,
            dropout: 0.0,
            attention_dropout: 0.5,
            pooling: Pooling::Mean,
            walk_length: 18,
            batch_size: 16,
            learning_rate: 1e-3,
            epochs: 200,
            warmup_epochs: 5,
            weight_decay: 1e-5,
            parameter_count: 99_486,
        },
        HparamPreset {
            dataset: "pattern",
            transformer_layers: 10,
            hidden_dim: 64,
            heads: 8,
            dropout: 0.0,
            attention_dropout: 0.2,
            pooling: Pooling::None,
            walk_length: 21,
            batch_size: 32,
            learning_rate: 5e-4,
            epochs: 100,
            warmup_epochs: 5,
            weight_decay: 1e-5,
            parameter_count: 477_953,
        },
        HparamPreset {
            dataset: "cluster",
            transformer_layers: 16,
            hidden_dim: 48,
            heads: 8,
            dropout: 0.01,
            attention_dropout: 0.5,
            pooling: Pooling::None,
            walk_length: 32,
            batch_size: 16,
            learning_rate: 5e-4,
            epochs: 100,
            warmup_epochs: 5,
            weight_decay: 1e-5,
            parameter_count: 432_206,
        },
        HparamPreset {
            dataset: "peptides-func",
            transformer_layers: 4,
            hidden_dim: 96,
            heads: 4,
            dropout: 0.0,
            attention_dropout: 0.5,
            pooling: Pooling::Mean,
            walk_length: 17,
            batch_size: 32,
            learning_rate: 3e-4,
            epochs: 200,
            warmup_epochs: 5,
            weight_decay: 0.0,
            parameter_count: 443_338,
        },
        HparamPreset {
            dataset: "peptides-struct",
            transformer_layers: 4,
            hidden_dim: 96,
            heads: 8,
            dropout: 0.0,
            attention_dropout: 0.5,
            pooling: Pooling::Mean,
            walk_length: 24,
            batch_size: 32,
            learning_rate: 3e-4,
            epochs: 200,
            warmup_epochs: 5,
            weight_decay: 0.0,
            parameter_count: 438_827,
        },
        HparamPreset {
            dataset: "pcqm4mv2",
            transformer_layers: 16,
            hidden_dim: 256,
            heads: 8,
            dropout: 0.1,
            attention_dropout: 0.1,
            pooling: Pooling::Mean,
            walk_length: 16,
            batch_size: 256,
            learning_rate: 2e-4,
            epochs: 150,
            warmup_epochs: 10,
            weight_decay: 0.0,
            parameter_count: 15_300_000,
        },
    ]
}
