//! The GRIT attention block.
//!
//! One block holds node representations `X` (n×d_node) and dense node-pair
//! representations `E` (n²×d_pair, row i·n+j is the ordered pair (i, j)) and
//! runs, per head:
//!
//! ```text
//! ê_ij  = ReLU( ρ((W_Q x_i + W_K x_j) ⊙ W_Ew e_ij) + W_Eb e_ij )
//! α_ij  = softmax_j( W_A ê_ij )
//! x̂_i   = Σ_j α_ij (W_V x_j + W_Ev ê_ij)
//! ```
//!
//! with ρ the signed square root. Heads combine through per-head output maps,
//! degree information re-enters through the learned scalers θ₁/θ₂ (attention
//! averages away degrees, so they must be injected back), and nodes then pass
//! through residual + batch norm + FFN + residual + batch norm. Pairs take a
//! residual + batch norm without an FFN. Attention includes the diagonal
//! (j = i) and every affine map carries a bias.
//!
//! Batch normalization here is per-graph over the node dimension; layer
//! normalization is provided for the degree-information analysis but is
//! deliberately not part of the block (it would cancel the degree scalers).

#![allow(clippy::needless_range_loop)]

use crate::encodings::RrwpTensor;
use crate::graph::{DegreeVector, Graph};
use crate::mat::Mat;
use crate::rng::SplitMix64;
use crate::tensor::{Tape, TensorRef};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const NORM_EPS: f64 = 1e-5;

#[derive(Debug, Error, PartialEq)]
pub enum GritError {
    #[error("state size mismatch: {0}")]
    StateMismatch(String),
    #[error("checkpoint field {0:?} is missing")]
    CheckpointMissing(String),
    #[error("checkpoint field {name:?} expects shape {expect:?}, got {got:?}")]
    CheckpointShape { name: String, expect: (usize, usize), got: (usize, usize) },
    #[error("checkpoint is not valid JSON: {0}")]
    CheckpointJson(String),
}

/// Host-side parameter buffer (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ParamTensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Uniform Glorot init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    pub fn glorot(rows: usize, cols: usize, rng: &mut SplitMix64) -> Self {
        let a = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.uniform_range(-a, a)).collect();
        Self { rows, cols, data }
    }

    pub fn leaf(&self, tape: &mut Tape) -> TensorRef {
        tape.leaf(self.rows, self.cols, self.data.clone(), true)
    }

    pub fn constant(&self, tape: &mut Tape) -> TensorRef {
        tape.constant(self.rows, self.cols, self.data.clone())
    }
}

/// Batch-norm parameters plus running statistics for eval mode.
#[derive(Debug, Clone)]
pub struct BnParams {
    pub gamma: ParamTensor,
    pub beta: ParamTensor,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BnParams {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: ParamTensor { rows: 1, cols: dim, data: vec![1.0; dim] },
            beta: ParamTensor::zeros(1, dim),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
        }
    }
}

/// Whether normalization uses batch statistics (training) or running
/// statistics (inference).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Train,
    Eval,
}

/// One attention head's weights. Projections into the head width `d_head`
/// come from `d_node` (queries/keys/values) or `d_pair` (pair maps); output
/// maps go back to `d_node`/`d_pair`.
#[derive(Debug, Clone)]
pub struct GritHeadParams {
    pub w_q: ParamTensor,
    pub b_q: ParamTensor,
    pub w_k: ParamTensor,
    pub b_k: ParamTensor,
    pub w_ew: ParamTensor,
    pub b_ew: ParamTensor,
    pub w_eb: ParamTensor,
    pub b_eb: ParamTensor,
    pub w_a: ParamTensor,
    pub b_a: ParamTensor,
    pub w_v: ParamTensor,
    pub b_v: ParamTensor,
    pub w_ev: ParamTensor,
    pub b_ev: ParamTensor,
    pub w_o: ParamTensor,
    pub b_o: ParamTensor,
    pub w_eo: ParamTensor,
    pub b_eo: ParamTensor,
}

impl GritHeadParams {
    pub fn init(d_node: usize, d_pair: usize, d_head: usize, rng: &mut SplitMix64) -> Self {
        Self {
            w_q: ParamTensor::glorot(d_node, d_head, rng),
            b_q: ParamTensor::zeros(1, d_head),
            w_k: ParamTensor::glorot(d_node, d_head, rng),
            b_k: ParamTensor::zeros(1, d_head),
            w_ew: ParamTensor::glorot(d_pair, d_head, rng),
            b_ew: ParamTensor::zeros(1, d_head),
            w_eb: ParamTensor::glorot(d_pair, d_head, rng),
            b_eb: ParamTensor::zeros(1, d_head),
            w_a: ParamTensor::glorot(d_head, 1, rng),
            b_a: ParamTensor::zeros(1, 1),
            w_v: ParamTensor::glorot(d_node, d_head, rng),
            b_v: ParamTensor::zeros(1, d_head),
            w_ev: ParamTensor::glorot(d_head, d_head, rng),
            b_ev: ParamTensor::zeros(1, d_head),
            w_o: ParamTensor::glorot(d_head, d_node, rng),
            b_o: ParamTensor::zeros(1, d_node),
            w_eo: ParamTensor::glorot(d_head, d_pair, rng),
            b_eo: ParamTensor::zeros(1, d_pair),
        }
    }
}

/// All weights of one GRIT block.
#[derive(Debug, Clone)]
pub struct GritLayerParams {
    pub d_node: usize,
    pub d_pair: usize,
    pub d_head: usize,
    pub heads: Vec<GritHeadParams>,
    pub theta1: ParamTensor,
    pub theta2: ParamTensor,
    pub ffn_w1: ParamTensor,
    pub ffn_b1: ParamTensor,
    pub ffn_w2: ParamTensor,
    pub ffn_b2: ParamTensor,
    pub bn_attn: BnParams,
    pub bn_ffn: BnParams,
    pub bn_pair: BnParams,
}

impl GritLayerParams {
    /// `d_head` defaults to `d_node / n_heads` when zero is passed.
    pub fn init(d_node: usize, d_pair: usize, n_heads: usize, d_head: usize, rng: &mut SplitMix64) -> Self {
        assert!(n_heads >= 1, "need at least one head");
        let d_head = if d_head == 0 {
            assert!(d_node.is_multiple_of(n_heads), "d_node {d_node} not divisible by {n_heads} heads");
            d_node / n_heads
        } else {
            d_head
        };
        let hidden = 2 * d_node;
        Self {
            d_node,
            d_pair,
            d_head,
            heads: (0..n_heads).map(|_| GritHeadParams::init(d_node, d_pair, d_head, rng)).collect(),
            theta1: ParamTensor { rows: 1, cols: d_node, data: vec![1.0; d_node] },
            theta2: ParamTensor::zeros(1, d_node),
            ffn_w1: ParamTensor::glorot(d_node, hidden, rng),
            ffn_b1: ParamTensor::zeros(1, hidden),
            ffn_w2: ParamTensor::glorot(hidden, d_node, rng),
            ffn_b2: ParamTensor::zeros(1, d_node),
            bn_attn: BnParams::new(d_node),
            bn_ffn: BnParams::new(d_node),
            bn_pair: BnParams::new(d_pair),
        }
    }

    pub fn n_heads(&self) -> usize {
        self.heads.len()
    }

    /// Every learnable buffer with a stable name, for optimizers and
    /// checkpoints. Running statistics are bookkeeping, not parameters, and
    /// are not listed.
    pub fn named_params_mut(&mut self) -> Vec<(String, &mut ParamTensor)> {
        let mut out: Vec<(String, &mut ParamTensor)> = Vec::new();
        for (h, head) in self.heads.iter_mut().enumerate() {
            let fields: [(&str, &mut ParamTensor); 18] = [
                ("w_q", &mut head.w_q),
                ("b_q", &mut head.b_q),
                ("w_k", &mut head.w_k),
                ("b_k", &mut head.b_k),
                ("w_ew", &mut head.w_ew),
                ("b_ew", &mut head.b_ew),
                ("w_eb", &mut head.w_eb),
                ("b_eb", &mut head.b_eb),
                ("w_a", &mut head.w_a),
                ("b_a", &mut head.b_a),
                ("w_v", &mut head.w_v),
                ("b_v", &mut head.b_v),
                ("w_ev", &mut head.w_ev),
                ("b_ev", &mut head.b_ev),
                ("w_o", &mut head.w_o),
                ("b_o", &mut head.b_o),
                ("w_eo", &mut head.w_eo),
                ("b_eo", &mut head.b_eo),
            ];
            for (name, p) in fields {
                out.push((format!("head{h}.{name}"), p));
            }
        }
        out.push(("theta1".into(), &mut self.theta1));
        out.push(("theta2".into(), &mut self.theta2));
        out.push(("ffn.w1".into(), &mut self.ffn_w1));
        out.push(("ffn.b1".into(), &mut self.ffn_b1));
        out.push(("ffn.w2".into(), &mut self.ffn_w2));
        out.push(("ffn.b2".into(), &mut self.ffn_b2));
        out.push(("bn_attn.gamma".into(), &mut self.bn_attn.gamma));
        out.push(("bn_attn.beta".into(), &mut self.bn_attn.beta));
        out.push(("bn_ffn.gamma".into(), &mut self.bn_ffn.gamma));
        out.push(("bn_ffn.beta".into(), &mut self.bn_ffn.beta));
        out.push(("bn_pair.gamma".into(), &mut self.bn_pair.gamma));
        out.push(("bn_pair.beta".into(), &mut self.bn_pair.beta));
        out
    }

    /// Flat JSON checkpoint: name → { shape, row-major data }.
    pub fn to_checkpoint_json(&mut self) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            shape: [usize; 2],
            data: &'a [f64],
        }
        let mut map = BTreeMap::new();
        for (name, p) in self.named_params_mut() {
            map.insert(name, Entry { shape: [p.rows, p.cols], data: &p.data });
        }
        // BTreeMap holds &mut-derived shared refs; serialize before drop
        serde_json::to_string_pretty(&map).expect("checkpoint serializes")
    }

    pub fn load_checkpoint_json(&mut self, json: &str) -> Result<(), GritError> {
        #[derive(Deserialize)]
        struct Entry {
            shape: [usize; 2],
            data: Vec<f64>,
        }
        let map: BTreeMap<String, Entry> =
            serde_json::from_str(json).map_err(|e| GritError::CheckpointJson(e.to_string()))?;
        for (name, p) in self.named_params_mut() {
            let entry = map
                .get(&name)
                .ok_or_else(|| GritError::CheckpointMissing(name.clone()))?;
            let got = (entry.shape[0], entry.shape[1]);
            if got != (p.rows, p.cols) || entry.data.len() != p.data.len() {
                return Err(GritError::CheckpointShape {
                    name,
                    expect: (p.rows, p.cols),
                    got,
                });
            }
            p.data.clone_from(&entry.data);
        }
        Ok(())
    }
}

/// Node and pair features for one graph, host side.
#[derive(Debug, Clone)]
pub struct GraphState {
    /// n×d_node node features.
    pub x: Mat,
    /// n²×d_pair pair features; row i·n+j is the ordered pair (i, j).
    pub e: Mat,
    pub degrees: DegreeVector,
}

impl GraphState {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d_node(&self) -> usize {
        self.x.cols()
    }

    pub fn d_pair(&self) -> usize {
        self.e.cols()
    }

    /// Relabels nodes: output state at `perm[i]` is input state at `i`.
    pub fn permuted(&self, perm: &[usize]) -> GraphState {
        let n = self.n();
        assert_eq!(perm.len(), n);
        let mut x = Mat::zeros(n, self.d_node());
        for i in 0..n {
            for c in 0..self.d_node() {
                x[(perm[i], c)] = self.x[(i, c)];
            }
        }
        let mut e = Mat::zeros(n * n, self.d_pair());
        for i in 0..n {
            for j in 0..n {
                for c in 0..self.d_pair() {
                    e[(perm[i] * n + perm[j], c)] = self.e[(i * n + j, c)];
                }
            }
        }
        let mut degrees = vec![0usize; n];
        for i in 0..n {
            degrees[perm[i]] = self.degrees.0[i];
        }
        GraphState { x, e, degrees: DegreeVector(degrees) }
    }
}

/// Builds the initial state: `X_i = [attrs_i ‖ P_ii]`,
/// `E_ij = [edge_attrs_ij or 0 ‖ P_ij]`. Attribute blocks are dropped when
/// the graph carries none.
pub fn init_state(g: &Graph, p: &RrwpTensor) -> Result<GraphState, GritError> {
    if g.n() != p.n() {
        return Err(GritError::StateMismatch(format!(
            "graph has {} nodes, encoding covers {}",
            g.n(),
            p.n()
        )));
    }
    let n = g.n();
    let k = p.k();
    let node_dim = g.node_attrs().map_or(0, |a| a.first().map_or(0, Vec::len));
    let edge_dim = g.edge_attr_dim();

    let mut x = Mat::zeros(n, node_dim + k);
    for i in 0..n {
        if let Some(attrs) = g.node_attrs() {
            for (c, &v) in attrs[i].iter().enumerate() {
                x[(i, c)] = v;
            }
        }
        for t in 0..k {
            x[(i, node_dim + t)] = p.get(i, i, t);
        }
    }

    let mut e = Mat::zeros(n * n, edge_dim + k);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            if let Some(attr) = g.edge_attr(i, j) {
                for (c, &v) in attr.iter().enumerate() {
                    e[(row, c)] = v;
                }
            }
            // unobserved edges keep a zero attribute block
            for t in 0..k {
                e[(row, edge_dim + t)] = p.get(i, j, t);
            }
        }
    }
    Ok(GraphState { x, e, degrees: g.degrees() })
}

/// Tape handles for one head's weights.
#[derive(Debug, Clone, Copy)]
pub struct HeadRefs {
    pub w_q: TensorRef,
    pub b_q: TensorRef,
    pub w_k: TensorRef,
    pub b_k: TensorRef,
    pub w_ew: TensorRef,
    pub b_ew: TensorRef,
    pub w_eb: TensorRef,
    pub b_eb: TensorRef,
    pub w_a: TensorRef,
    pub b_a: TensorRef,
    pub w_v: TensorRef,
    pub b_v: TensorRef,
    pub w_ev: TensorRef,
    pub b_ev: TensorRef,
    pub w_o: TensorRef,
    pub b_o: TensorRef,
    pub w_eo: TensorRef,
    pub b_eo: TensorRef,
}

impl GritHeadParams {
    pub fn leaves(&self, tape: &mut Tape) -> HeadRefs {
        HeadRefs {
            w_q: self.w_q.leaf(tape),
            b_q: self.b_q.leaf(tape),
            w_k: self.w_k.leaf(tape),
            b_k: self.b_k.leaf(tape),
            w_ew: self.w_ew.leaf(tape),
            b_ew: self.b_ew.leaf(tape),
            w_eb: self.w_eb.leaf(tape),
            b_eb: self.b_eb.leaf(tape),
            w_a: self.w_a.leaf(tape),
            b_a: self.b_a.leaf(tape),
            w_v: self.w_v.leaf(tape),
            b_v: self.b_v.leaf(tape),
            w_ev: self.w_ev.leaf(tape),
            b_ev: self.b_ev.leaf(tape),
            w_o: self.w_o.leaf(tape),
            b_o: self.b_o.leaf(tape),
            w_eo: self.w_eo.leaf(tape),
            b_eo: self.b_eo.leaf(tape),
        }
    }
}

/// One head's outputs on the tape.
#[derive(Debug, Clone, Copy)]
pub struct HeadOutput {
    /// n×d_head aggregated node updates.
    pub xhat: TensorRef,
    /// n²×d_head updated pair representations.
    pub ehat: TensorRef,
    /// n×n attention; every row sums to one and includes j = i.
    pub alpha: TensorRef,
}

/// The three attention equations for a single head.
pub fn attention_head(
    tape: &mut Tape,
    h: &HeadRefs,
    x: TensorRef,
    e: TensorRef,
    n: usize,
) -> HeadOutput {
    let q = tape.matmul(x, h.w_q);
    let q = tape.add(q, h.b_q);
    let k = tape.matmul(x, h.w_k);
    let k = tape.add(k, h.b_k);
    // pair grid: row i*n+j sees q_i + k_j
    let q_pairs = tape.repeat_rows(q, n);
    let k_pairs = tape.tile_rows(k, n);
    let qk = tape.add(q_pairs, k_pairs);

    let ew = tape.matmul(e, h.w_ew);
    let ew = tape.add(ew, h.b_ew);
    let eb = tape.matmul(e, h.w_eb);
    let eb = tape.add(eb, h.b_eb);

    let gated = tape.mul(qk, ew);
    let rho = tape.signed_sqrt(gated);
    let pre = tape.add(rho, eb);
    let ehat = tape.relu(pre);

    let logits_flat = tape.matmul(ehat, h.w_a);
    let logits_flat = tape.add(logits_flat, h.b_a);
    let logits = tape.reshape(logits_flat, n, n);
    let alpha = tape.softmax_rows(logits);

    let v = tape.matmul(x, h.w_v);
    let v = tape.add(v, h.b_v);
    let ev = tape.matmul(ehat, h.w_ev);
    let ev = tape.add(ev, h.b_ev);

    let att_v = tape.matmul(alpha, v);
    let alpha_flat = tape.reshape(alpha, n * n, 1);
    let weighted_ev = tape.row_scale_by(ev, alpha_flat);
    let att_ev = tape.block_sum_rows(weighted_ev, n);
    let xhat = tape.add(att_v, att_ev);

    HeadOutput { xhat, ehat, alpha }
}

/// Sums per-head output projections: `X_out = Σ_h x̂_h W_O^h`,
/// `E_out = Σ_h ê_h W_Eo^h` (plus biases).
pub fn multi_head_combine(
    tape: &mut Tape,
    heads: &[(HeadOutput, HeadRefs)],
) -> (TensorRef, TensorRef) {
    assert!(!heads.is_empty(), "need at least one head");
    let mut x_out: Option<TensorRef> = None;
    let mut e_out: Option<TensorRef> = None;
    for (out, refs) in heads {
        let xo = tape.matmul(out.xhat, refs.w_o);
        let xo = tape.add(xo, refs.b_o);
        let eo = tape.matmul(out.ehat, refs.w_eo);
        let eo = tape.add(eo, refs.b_eo);
        x_out = Some(match x_out {
            Some(acc) => tape.add(acc, xo),
            None => xo,
        });
        e_out = Some(match e_out {
            Some(acc) => tape.add(acc, eo),
            None => eo,
        });
    }
    (x_out.unwrap(), e_out.unwrap())
}

/// `x_i ⊙ θ₁ + log(1 + d_i) · x_i ⊙ θ₂` (natural log).
pub fn degree_scale(
    tape: &mut Tape,
    x_out: TensorRef,
    degrees: &DegreeVector,
    theta1: TensorRef,
    theta2: TensorRef,
) -> TensorRef {
    let log_deg: Vec<f64> = degrees.0.iter().map(|&d| (1.0 + d as f64).ln()).collect();
    let t1 = tape.mul(x_out, theta1);
    let scaled = tape.scale_rows_const(x_out, &log_deg);
    let t2 = tape.mul(scaled, theta2);
    tape.add(t1, t2)
}

/// Per-channel normalization over nodes within the graph.
pub fn batch_norm_nodes(
    tape: &mut Tape,
    x: TensorRef,
    bn: &BnParams,
    mode: NormMode,
) -> TensorRef {
    let gamma = bn.gamma.leaf(tape);
    let beta = bn.beta.leaf(tape);
    match mode {
        NormMode::Train => tape.batch_norm_train(x, gamma, beta, NORM_EPS),
        NormMode::Eval => {
            tape.batch_norm_eval(x, gamma, beta, &bn.running_mean, &bn.running_var, NORM_EPS)
        }
    }
}

/// Per-node normalization over channels.
pub fn layer_norm_nodes(tape: &mut Tape, x: TensorRef, bn: &BnParams) -> TensorRef {
    let gamma = bn.gamma.leaf(tape);
    let beta = bn.beta.leaf(tape);
    tape.layer_norm_rows(x, gamma, beta, NORM_EPS)
}

/// Full block output on the tape.
#[derive(Debug, Clone)]
pub struct BlockOutput {
    pub x: TensorRef,
    pub e: TensorRef,
    pub alphas: Vec<TensorRef>,
}

/// Forward pass of one GRIT block over tape-resident state.
pub fn grit_block(
    tape: &mut Tape,
    params: &GritLayerParams,
    x: TensorRef,
    e: TensorRef,
    degrees: &DegreeVector,
    mode: NormMode,
) -> BlockOutput {
    let n = degrees.0.len();
    assert_eq!(tape.shape(x).0, n, "X rows must match node count");
    assert_eq!(tape.shape(e).0, n * n, "E rows must be n^2");

    let mut heads = Vec::with_capacity(params.heads.len());
    for head in &params.heads {
        let refs = head.leaves(tape);
        let out = attention_head(tape, &refs, x, e, n);
        heads.push((out, refs));
    }
    let alphas = heads.iter().map(|(o, _)| o.alpha).collect();
    let (x_out, e_out) = multi_head_combine(tape, &heads);

    let theta1 = params.theta1.leaf(tape);
    let theta2 = params.theta2.leaf(tape);
    let x_scaled = degree_scale(tape, x_out, degrees, theta1, theta2);

    let x_res = tape.add(x, x_scaled);
    let x_bn1 = batch_norm_nodes(tape, x_res, &params.bn_attn, mode);

    let w1 = params.ffn_w1.leaf(tape);
    let b1 = params.ffn_b1.leaf(tape);
    let w2 = params.ffn_w2.leaf(tape);
    let b2 = params.ffn_b2.leaf(tape);
    let hidden = tape.matmul(x_bn1, w1);
    let hidden = tape.add(hidden, b1);
    let hidden = tape.relu(hidden);
    let ffn_out = tape.matmul(hidden, w2);
    let ffn_out = tape.add(ffn_out, b2);
    let x_res2 = tape.add(x_bn1, ffn_out);
    let x_final = batch_norm_nodes(tape, x_res2, &params.bn_ffn, mode);

    let e_res = tape.add(e, e_out);
    let e_final = batch_norm_nodes(tape, e_res, &params.bn_pair, mode);

    BlockOutput { x: x_final, e: e_final, alphas }
}

/// Column-wise sum or mean over nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Sum,
    Mean,
}

pub fn pool(tape: &mut Tape, x: TensorRef, kind: PoolKind) -> TensorRef {
    let (rows, _) = tape.shape(x);
    assert!(rows >= 1, "pool needs at least one row");
    let summed = tape.block_sum_rows(x, rows);
    match kind {
        PoolKind::Sum => summed,
        PoolKind::Mean => tape.scalar_mul(summed, 1.0 / rows as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{rrwp, NumericMode};
    use crate::named::NamedGraph;
    use crate::tensor::gradcheck_multi;

    fn small_state(n_nodes: usize, k: usize, seed: u64) -> (Graph, GraphState) {
        let g = crate::generate::sample_molecular_like(n_nodes, seed).unwrap();
        let p = rrwp(&g, k, NumericMode::Float64).unwrap();
        let state = init_state(&g, &p).unwrap();
        (g, state)
    }

    #[test]
    fn init_state_attribute_free() {
        let g = NamedGraph::Path(3).build();
        let p = rrwp(&g, 2, NumericMode::Float64).unwrap();
        let st = init_state(&g, &p).unwrap();
        // X equals the walk diagonal features
        let x = crate::encodings::rwse(&p);
        assert_eq!(st.x, x);
        // E row (0,1) is P[0,1,:] = [0, 1]
        assert_eq!(st.e.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn init_state_with_attrs() {
        let g = NamedGraph::Path(3)
            .build()
            .with_node_attrs(vec![vec![7.0], vec![8.0], vec![9.0]])
            .unwrap();
        let p = rrwp(&g, 2, NumericMode::Float64).unwrap();
        let st = init_state(&g, &p).unwrap();
        assert_eq!(st.x.row(0), &[7.0, 1.0, 0.0]);
    }

    #[test]
    fn init_state_non_edge_zero_attr_block() {
        let mut edge_attrs = std::collections::BTreeMap::new();
        edge_attrs.insert((0usize, 1usize), vec![5.0]);
        edge_attrs.insert((1usize, 0usize), vec![5.0]);
        edge_attrs.insert((1usize, 2usize), vec![6.0]);
        edge_attrs.insert((2usize, 1usize), vec![6.0]);
        let g = NamedGraph::Path(3).build().with_edge_attrs(edge_attrs);
        let p = rrwp(&g, 2, NumericMode::Float64).unwrap();
        let st = init_state(&g, &p).unwrap();
        // non-edge (0,2): zero attribute, P[0,2,:] = [0,0]
        assert_eq!(st.e.row(2), &[0.0, 0.0, 0.0]);
        // edge (0,1): attr 5, P[0,1,:] = [0,1]
        assert_eq!(st.e.row(1), &[5.0, 0.0, 1.0]);
    }

    #[test]
    fn init_state_size_mismatch() {
        let g = NamedGraph::Path(3).build();
        let p = rrwp(&NamedGraph::Path(4).build(), 2, NumericMode::Float64).unwrap();
        assert!(init_state(&g, &p).is_err());
    }

    /// Direct per-pair evaluation of the three attention equations,
    /// independent of the tape implementation.
    fn straight_line_head(h: &GritHeadParams, st: &GraphState) -> (Mat, Mat) {
        let n = st.n();
        let d_head = h.w_q.cols;
        let affine = |w: &ParamTensor, b: &ParamTensor, row: &[f64]| -> Vec<f64> {
            (0..w.cols)
                .map(|c| {
                    b.data[c]
                        + row.iter().enumerate().map(|(r, &v)| v * w.data[r * w.cols + c]).sum::<f64>()
                })
                .collect()
        };
        let rho = |x: f64| {
            if x > 0.0 {
                x.sqrt()
            } else if x < 0.0 {
                -(-x).sqrt()
            } else {
                0.0
            }
        };
        let mut ehat = vec![vec![0.0; d_head]; n * n];
        for i in 0..n {
            let qi = affine(&h.w_q, &h.b_q, st.x.row(i));
            for j in 0..n {
                let kj = affine(&h.w_k, &h.b_k, st.x.row(j));
                let eij = st.e.row(i * n + j);
                let ew = affine(&h.w_ew, &h.b_ew, eij);
                let eb = affine(&h.w_eb, &h.b_eb, eij);
                for c in 0..d_head {
                    let v = rho((qi[c] + kj[c]) * ew[c]) + eb[c];
                    ehat[i * n + j][c] = v.max(0.0);
                }
            }
        }
        let mut alpha = Mat::zeros(n, n);
        for i in 0..n {
            let logits: Vec<f64> = (0..n)
                .map(|j| affine(&h.w_a, &h.b_a, &ehat[i * n + j])[0])
                .collect();
            let sum: f64 = logits.iter().map(|&l| l.exp()).sum();
            for j in 0..n {
                alpha[(i, j)] = logits[j].exp() / sum;
            }
        }
        let mut xhat = Mat::zeros(n, d_head);
        for i in 0..n {
            for j in 0..n {
                let vj = affine(&h.w_v, &h.b_v, st.x.row(j));
                let evij = affine(&h.w_ev, &h.b_ev, &ehat[i * n + j]);
                for c in 0..d_head {
                    xhat[(i, c)] += alpha[(i, j)] * (vj[c] + evij[c]);
                }
            }
        }
        (alpha, xhat)
    }

    #[test]
    fn attention_head_matches_straight_line_oracle() {
        let (_, st) = small_state(4, 3, 2);
        let mut rng = SplitMix64::new(5);
        let head = GritHeadParams::init(st.d_node(), st.d_pair(), 4, &mut rng);
        let (alpha_oracle, xhat_oracle) = straight_line_head(&head, &st);

        let mut tape = Tape::new();
        let x = tape.constant(st.n(), st.d_node(), st.x.data().to_vec());
        let e = tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
        let refs = head.leaves(&mut tape);
        let out = attention_head(&mut tape, &refs, x, e, st.n());

        let n = st.n();
        for i in 0..n {
            for j in 0..n {
                let tape_v = tape.value(out.alpha)[i * n + j];
                assert!((tape_v - alpha_oracle[(i, j)]).abs() < 1e-12);
            }
            for c in 0..4 {
                let tape_v = tape.value(out.xhat)[i * 4 + c];
                assert!((tape_v - xhat_oracle[(i, c)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let (_, st) = small_state(6, 4, 3);
        let mut rng = SplitMix64::new(11);
        let params = GritLayerParams::init(st.d_node(), st.d_pair(), 2, 3, &mut rng);
        let mut tape = Tape::new();
        let x = tape.constant(st.n(), st.d_node(), st.x.data().to_vec());
        let e = tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
        let out = grit_block(&mut tape, &params, x, e, &st.degrees, NormMode::Train);
        for alpha in &out.alphas {
            for i in 0..st.n() {
                let row_sum: f64 = tape.value(*alpha)[i * st.n()..(i + 1) * st.n()].iter().sum();
                assert!((row_sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_node_attention_is_one() {
        let g = Graph::from_edges(1, &[], false).unwrap();
        let p = rrwp(&g, 2, NumericMode::Float64).unwrap();
        let st = init_state(&g, &p).unwrap();
        let mut rng = SplitMix64::new(1);
        let head = GritHeadParams::init(st.d_node(), st.d_pair(), 3, &mut rng);
        let mut tape = Tape::new();
        let x = tape.constant(1, st.d_node(), st.x.data().to_vec());
        let e = tape.constant(1, st.d_pair(), st.e.data().to_vec());
        let refs = head.leaves(&mut tape);
        let out = attention_head(&mut tape, &refs, x, e, 1);
        assert_eq!(tape.value(out.alpha), &[1.0]);
    }

    #[test]
    fn zero_attention_weight_uniform_rows() {
        let (_, st) = small_state(5, 3, 7);
        let mut rng = SplitMix64::new(2);
        let mut head = GritHeadParams::init(st.d_node(), st.d_pair(), 3, &mut rng);
        head.w_a = ParamTensor::zeros(3, 1);
        head.b_a = ParamTensor::zeros(1, 1);
        let mut tape = Tape::new();
        let x = tape.constant(st.n(), st.d_node(), st.x.data().to_vec());
        let e = tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
        let refs = head.leaves(&mut tape);
        let out = attention_head(&mut tape, &refs, x, e, st.n());
        let uniform = 1.0 / st.n() as f64;
        for v in tape.value(out.alpha) {
            assert!((v - uniform).abs() < 1e-12);
        }
    }

    #[test]
    fn multi_head_combine_two_heads_explicit_sum() {
        let (_, st) = small_state(4, 3, 9);
        let mut rng = SplitMix64::new(3);
        let params = GritLayerParams::init(st.d_node(), st.d_pair(), 2, 3, &mut rng);
        let mut tape = Tape::new();
        let x = tape.constant(st.n(), st.d_node(), st.x.data().to_vec());
        let e = tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
        let mut heads = Vec::new();
        for head in &params.heads {
            let refs = head.leaves(&mut tape);
            let out = attention_head(&mut tape, &refs, x, e, st.n());
            heads.push((out, refs));
        }
        let (x_out, _) = multi_head_combine(&mut tape, &heads);

        // explicit two-term sum
        let mut expected = vec![0.0; st.n() * st.d_node()];
        for (out, _) in &heads {
            let xhat = tape.value(out.xhat).to_vec();
            let head_idx = heads.iter().position(|(o, _)| o.xhat == out.xhat).unwrap();
            let w_o = &params.heads[head_idx].w_o;
            for i in 0..st.n() {
                for c in 0..st.d_node() {
                    let mut acc = 0.0;
                    for r in 0..w_o.rows {
                        acc += xhat[i * w_o.rows + r] * w_o.data[r * w_o.cols + c];
                    }
                    expected[i * st.d_node() + c] += acc; // biases are zero at init
                }
            }
        }
        for (a, b) in tape.value(x_out).iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_scale_hand_value() {
        // x=[2], d=3, theta1=[1], theta2=[1] -> 2 + 2 ln 4
        let mut tape = Tape::new();
        let x = tape.constant(1, 1, vec![2.0]);
        let t1 = tape.constant(1, 1, vec![1.0]);
        let t2 = tape.constant(1, 1, vec![1.0]);
        let out = degree_scale(&mut tape, x, &DegreeVector(vec![3]), t1, t2);
        let expect = 2.0 + 2.0 * 4.0f64.ln();
        assert!((tape.value(out)[0] - expect).abs() < 1e-12);
        assert!((tape.value(out)[0] - 4.77259).abs() < 1e-5);
    }

    #[test]
    fn degree_scale_identity_and_isolated() {
        let mut tape = Tape::new();
        let x = tape.constant(2, 2, vec![1.0, -2.0, 3.0, 4.0]);
        let ones = tape.constant(1, 2, vec![1.0, 1.0]);
        let zeros = tape.constant(1, 2, vec![0.0, 0.0]);
        let out = degree_scale(&mut tape, x, &DegreeVector(vec![5, 2]), ones, zeros);
        assert_eq!(tape.value(out), tape.value(x));
        // isolated node: log(1+0) = 0 so theta2 contributes nothing
        let out2 = degree_scale(&mut tape, x, &DegreeVector(vec![0, 0]), ones, ones);
        assert_eq!(tape.value(out2), tape.value(x));
    }

    #[test]
    fn block_zeroed_outputs_reduce_to_normalized_identity() {
        let (_, st) = small_state(5, 3, 13);
        let mut rng = SplitMix64::new(4);
        let mut params = GritLayerParams::init(st.d_node(), st.d_pair(), 1, 3, &mut rng);
        for head in &mut params.heads {
            head.w_o = ParamTensor::zeros(3, st.d_node());
            head.b_o = ParamTensor::zeros(1, st.d_node());
            head.w_eo = ParamTensor::zeros(3, st.d_pair());
            head.b_eo = ParamTensor::zeros(1, st.d_pair());
        }
        params.ffn_w2 = ParamTensor::zeros(2 * st.d_node(), st.d_node());

        let mut tape = Tape::new();
        let x = tape.constant(st.n(), st.d_node(), st.x.data().to_vec());
        let e = tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
        let out = grit_block(&mut tape, &params, x, e, &st.degrees, NormMode::Train);

        // with all output projections zeroed the block is BN(BN(X)) and BN(E)
        let mut ref_tape = Tape::new();
        let xr = ref_tape.constant(st.n(), st.d_node(), st.x.data().to_vec());
        let er = ref_tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
        let bn1 = batch_norm_nodes(&mut ref_tape, xr, &params.bn_attn, NormMode::Train);
        let bn2 = batch_norm_nodes(&mut ref_tape, bn1, &params.bn_ffn, NormMode::Train);
        let bne = batch_norm_nodes(&mut ref_tape, er, &params.bn_pair, NormMode::Train);
        for (a, b) in tape.value(out.x).iter().zip(ref_tape.value(bn2)) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in tape.value(out.e).iter().zip(ref_tape.value(bne)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_update_changes_e() {
        let (_, st) = small_state(4, 3, 17);
        let mut rng = SplitMix64::new(6);
        let params = GritLayerParams::init(st.d_node(), st.d_pair(), 1, 3, &mut rng);
        let mut tape = Tape::new();
        let x = tape.constant(st.n(), st.d_node(), st.x.data().to_vec());
        let e = tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
        let out = grit_block(&mut tape, &params, x, e, &st.degrees, NormMode::Train);
        // E_out != 0 because w_eo is randomly initialized; BN(E + E_out) != BN(E)
        let mut ref_tape = Tape::new();
        let er = ref_tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
        let bne = batch_norm_nodes(&mut ref_tape, er, &params.bn_pair, NormMode::Train);
        let diff: f64 = tape
            .value(out.e)
            .iter()
            .zip(ref_tape.value(bne))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff > 1e-6, "pair path inert: {diff}");
    }

    #[test]
    fn block_gradcheck_small_graph() {
        // full block on a 5-node graph; checks d(mean(X_out)) w.r.t. a dense
        // weight, a bias, the degree scalers, and the inputs
        let (_, st) = small_state(5, 3, 19);
        let mut rng = SplitMix64::new(8);
        let params = GritLayerParams::init(st.d_node(), st.d_pair(), 1, 3, &mut rng);
        let degrees = st.degrees.clone();
        let n = st.n();
        let (dn, dp) = (st.d_node(), st.d_pair());

        let inputs = vec![
            (n, dn, st.x.data().to_vec()),
            (params.heads[0].w_q.rows, params.heads[0].w_q.cols, params.heads[0].w_q.data.clone()),
            (1, dn, params.theta2.data.clone()),
        ];
        let e_data = st.e.data().to_vec();
        let report = gradcheck_multi(
            |tape, leaves| {
                let mut p = params.clone();
                p.heads[0].w_q.data = tape.value(leaves[1]).to_vec();
                p.theta2.data = tape.value(leaves[2]).to_vec();
                // rebuild forward with the checked tensors as live leaves
                let e = tape.constant(n * n, dp, e_data.clone());
                let refs = {
                    let head = &p.heads[0];
                    let mut r = head.leaves(tape);
                    r.w_q = leaves[1];
                    r
                };
                let out = attention_head(tape, &refs, leaves[0], e, n);
                let (x_out, e_out) = multi_head_combine(tape, &[(out, refs)]);
                let theta1 = p.theta1.leaf(tape);
                let x_scaled = degree_scale(tape, x_out, &degrees, theta1, leaves[2]);
                let x_res = tape.add(leaves[0], x_scaled);
                let x_bn = batch_norm_nodes(tape, x_res, &p.bn_attn, NormMode::Train);
                let w1 = p.ffn_w1.leaf(tape);
                let b1 = p.ffn_b1.leaf(tape);
                let w2 = p.ffn_w2.leaf(tape);
                let b2 = p.ffn_b2.leaf(tape);
                let h = tape.matmul(x_bn, w1);
                let h = tape.add(h, b1);
                let h = tape.relu(h);
                let f = tape.matmul(h, w2);
                let f = tape.add(f, b2);
                let x2 = tape.add(x_bn, f);
                let x_fin = batch_norm_nodes(tape, x2, &p.bn_ffn, NormMode::Train);
                let e_res = tape.add(e, e_out);
                let e_fin = batch_norm_nodes(tape, e_res, &p.bn_pair, NormMode::Train);
                let mx = tape.mean(x_fin);
                let me = tape.mean(e_fin);
                tape.add(mx, me)
            },
            &inputs,
            1e-5,
            1e-4,
        );
        assert!(report.pass, "block gradcheck failed: {}", report.max_rel_err);
    }

    #[test]
    fn block_equivariant_under_permutation() {
        let (g, st) = small_state(6, 4, 23);
        let mut rng = SplitMix64::new(12);
        let params = GritLayerParams::init(st.d_node(), st.d_pair(), 2, 3, &mut rng);
        let perm: Vec<usize> = vec![3, 0, 5, 1, 4, 2];
        let st_perm = st.permuted(&perm);
        let n = g.n();

        let mut tape = Tape::new();
        let x = tape.constant(n, st.d_node(), st.x.data().to_vec());
        let e = tape.constant(n * n, st.d_pair(), st.e.data().to_vec());
        let out = grit_block(&mut tape, &params, x, e, &st.degrees, NormMode::Train);

        let mut tape_p = Tape::new();
        let xp = tape_p.constant(n, st.d_node(), st_perm.x.data().to_vec());
        let ep = tape_p.constant(n * n, st.d_pair(), st_perm.e.data().to_vec());
        let out_p = grit_block(&mut tape_p, &params, xp, ep, &st_perm.degrees, NormMode::Train);

        let d = st.d_node();
        for i in 0..n {
            for c in 0..d {
                let a = tape.value(out.x)[i * d + c];
                let b = tape_p.value(out_p.x)[perm[i] * d + c];
                assert!((a - b).abs() < 1e-10, "node {i} channel {c}: {a} vs {b}");
            }
        }
        for i in 0..n {
            for j in 0..n {
                let a = tape.value(out.alphas[0])[i * n + j];
                let b = tape_p.value(out_p.alphas[0])[perm[i] * n + perm[j]];
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn block_cost_scales_quadratically() {
        let mut cost = Vec::new();
        for &n_nodes in &[20usize, 40] {
            let g = crate::generate::sample_molecular_like(n_nodes, 31).unwrap();
            let p = rrwp(&g, 8, NumericMode::Float64).unwrap();
            let st = init_state(&g, &p).unwrap();
            let mut rng = SplitMix64::new(14);
            let params = GritLayerParams::init(st.d_node(), st.d_pair(), 1, 8, &mut rng);
            let mut tape = Tape::new();
            let x = tape.constant(st.n(), st.d_node(), st.x.data().to_vec());
            let e = tape.constant(st.n() * st.n(), st.d_pair(), st.e.data().to_vec());
            let _ = grit_block(&mut tape, &params, x, e, &st.degrees, NormMode::Train);
            cost.push(tape.flops() as f64);
        }
        let ratio = cost[1] / cost[0];
        assert!((3.4..=4.6).contains(&ratio), "doubling n gave flop ratio {ratio}");
    }

    #[test]
    fn pool_sum_and_mean() {
        let mut tape = Tape::new();
        let x = tape.constant(3, 1, vec![1.0, 2.0, 3.0]);
        let s = pool(&mut tape, x, PoolKind::Sum);
        assert_eq!(tape.value(s), &[6.0]);
        let m = pool(&mut tape, x, PoolKind::Mean);
        assert_eq!(tape.value(m), &[2.0]);
        let same = tape.constant(2, 2, vec![4.0, 5.0, 4.0, 5.0]);
        let m2 = pool(&mut tape, same, PoolKind::Mean);
        assert_eq!(tape.value(m2), &[4.0, 5.0]);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let mut rng = SplitMix64::new(77);
        let mut params = GritLayerParams::init(4, 3, 2, 2, &mut rng);
        let json = params.to_checkpoint_json();
        let mut rng2 = SplitMix64::new(78);
        let mut other = GritLayerParams::init(4, 3, 2, 2, &mut rng2);
        other.load_checkpoint_json(&json).unwrap();
        assert_eq!(other.to_checkpoint_json(), json);
        // shape mismatch rejected
        let mut wrong = GritLayerParams::init(5, 3, 1, 2, &mut rng2);
        assert!(wrong.load_checkpoint_json(&json).is_err());
    }

    #[test]
    fn eval_mode_uses_running_stats() {
        let mut bn = BnParams::new(2);
        bn.running_mean = vec![1.0, -1.0];
        bn.running_var = vec![4.0, 0.25];
        let mut tape = Tape::new();
        let x = tape.constant(1, 2, vec![3.0, 0.0]);
        let y = batch_norm_nodes(&mut tape, x, &bn, NormMode::Eval);
        let v = tape.value(y);
        assert!((v[0] - 2.0 / (4.0f64 + NORM_EPS).sqrt()).abs() < 1e-12);
        assert!((v[1] - 1.0 / (0.25f64 + NORM_EPS).sqrt()).abs() < 1e-12);
    }
}
