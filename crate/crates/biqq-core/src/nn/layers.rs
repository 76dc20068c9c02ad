use std::collections::HashMap;

use crate::error::{CoreError, Result};
use crate::nn::config::ModelConfig;
use crate::nn::params::{gate_bias_name, gate_weight_name, ModelParams};
use crate::tape::{NodeId, Tape};
use crate::tensor::{Real, Tensor};
use crate::PAD_ID;

/// Parameter leaves registered on one tape, addressable by name.
pub struct LoadedParams {
    map: HashMap<String, NodeId>,
}

impl LoadedParams {
    pub fn load<T: Real>(tape: &mut Tape<T>, params: &ModelParams<T>) -> Self {
        let mut map = HashMap::new();
        for (name, t) in params.iter() {
            map.insert(name.to_string(), tape.leaf(t.clone()));
        }
        LoadedParams { map }
    }

    /// Binds existing leaf ids to parameter names (used by gradient
    /// checkers that perturb leaf tensors directly).
    pub fn from_pairs(names: &[String], ids: &[NodeId]) -> Self {
        assert_eq!(names.len(), ids.len());
        let map = names.iter().cloned().zip(ids.iter().copied()).collect();
        LoadedParams { map }
    }

    pub fn id(&self, name: &str) -> NodeId {
        *self
            .map
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} not loaded"))
    }
}

/// Builds the real block matrix of a quaternion linear map from its four
/// component matrices (each `[a, b]`), as consumed by a packed input:
/// `out = x_packed · W`. The block pattern mirrors left Hamilton
/// multiplication by the weight.
pub fn expand_quaternion_matrix<T: Real>(
    tape: &mut Tape<T>,
    comps: [NodeId; 4],
) -> Result<NodeId> {
    let [r, x, y, z] = comps;
    let nx = tape.neg(x)?;
    let ny = tape.neg(y)?;
    let nz = tape.neg(z)?;
    let row_r = tape.concat_cols(&[r, x, y, z])?;
    let row_x = tape.concat_cols(&[nx, r, z, ny])?;
    let row_y = tape.concat_cols(&[ny, nz, r, x])?;
    let row_z = tape.concat_cols(&[nz, y, nx, r])?;
    tape.concat_rows(&[row_r, row_x, row_y, row_z])
}

/// Quaternion linear layer on a packed input `[.., 4a] -> [.., 4b]`.
pub fn qlinear<T: Real>(tape: &mut Tape<T>, x: NodeId, comps: [NodeId; 4]) -> Result<NodeId> {
    let w = expand_quaternion_matrix(tape, comps)?;
    tape.matmul(x, w)
}

/// Causal quaternion convolution plus packed bias. `taps[tau]` holds the
/// component matrices of the kernel applied to `x[t - tau]`.
pub fn qconv<T: Real>(
    tape: &mut Tape<T>,
    x: NodeId,
    taps: &[[NodeId; 4]],
    bias: NodeId,
) -> Result<NodeId> {
    if taps.is_empty() {
        return Err(CoreError::ShapeMismatch {
            op: "qconv",
            details: "zero-width kernel".into(),
        });
    }
    let mut expanded = Vec::with_capacity(taps.len());
    for comps in taps {
        expanded.push(expand_quaternion_matrix(tape, *comps)?);
    }
    let kernel = tape.concat_rows(&expanded)?;
    let conv = tape.conv_causal(x, kernel, taps.len())?;
    tape.add_bias(conv, bias)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

fn gate_conv<T: Real>(
    tape: &mut Tape<T>,
    lp: &LoadedParams,
    cfg: &ModelConfig,
    x: NodeId,
    layer: usize,
    dir_tag: &str,
    gate: &str,
) -> Result<NodeId> {
    let mut taps = Vec::with_capacity(cfg.conv_width);
    for tau in 0..cfg.conv_width {
        taps.push([
            lp.id(&gate_weight_name(layer, dir_tag, gate, tau, "r")),
            lp.id(&gate_weight_name(layer, dir_tag, gate, tau, "x")),
            lp.id(&gate_weight_name(layer, dir_tag, gate, tau, "y")),
            lp.id(&gate_weight_name(layer, dir_tag, gate, tau, "z")),
        ]);
    }
    let bias = lp.id(&gate_bias_name(layer, dir_tag, gate));
    qconv(tape, x, &taps, bias)
}

/// One direction of a convolution-gated recurrent layer, with explicit
/// control over which weight set and time orientation to use. Gates come
/// from causal convolutions; only the cell-state update is sequential:
/// `c_t = f_t * c_{t-1} + i_t * z_t`, `h_t = o_t * c_t`, with no squashing
/// of `c_t`. Masked (padding) steps clear the state so both orientations
/// see identical zero context.
pub fn qqlstm_layer_with<T: Real>(
    tape: &mut Tape<T>,
    lp: &LoadedParams,
    cfg: &ModelConfig,
    x: NodeId,
    mask: &[bool],
    layer: usize,
    weight_dir: &str,
    time_reversed: bool,
) -> Result<NodeId> {
    let (n, width) = tape.value(x).as_2d();
    if mask.len() != n {
        return Err(CoreError::ShapeMismatch {
            op: "qqlstm_layer",
            details: format!("mask length {} for {} rows", mask.len(), n),
        });
    }
    if width != 4 * cfg.in_units(layer) {
        return Err(CoreError::ShapeMismatch {
            op: "qqlstm_layer",
            details: format!("input width {} for layer {}", width, layer),
        });
    }
    let (x, mask): (NodeId, Vec<bool>) = if time_reversed {
        let mut m = mask.to_vec();
        m.reverse();
        (tape.reverse_time(x)?, m)
    } else {
        (x, mask.to_vec())
    };

    let f_pre = gate_conv(tape, lp, cfg, x, layer, weight_dir, "f")?;
    let o_pre = gate_conv(tape, lp, cfg, x, layer, weight_dir, "o")?;
    let i_pre = gate_conv(tape, lp, cfg, x, layer, weight_dir, "i")?;
    let z_pre = gate_conv(tape, lp, cfg, x, layer, weight_dir, "z")?;
    let f = tape.sigmoid(f_pre)?;
    let o = tape.sigmoid(o_pre)?;
    let i = tape.sigmoid(i_pre)?;
    let z = tape.tanh(z_pre)?;

    let hreal = 4 * cfg.hidden;
    let mut c = tape.leaf(Tensor::zeros(vec![1, hreal]));
    let mut h_rows = Vec::with_capacity(n);
    for t in 0..n {
        let ft = tape.row(f, t)?;
        let it = tape.row(i, t)?;
        let zt = tape.row(z, t)?;
        let ot = tape.row(o, t)?;
        let keep = tape.mul(ft, c)?;
        let write = tape.mul(it, zt)?;
        let mut ct = tape.add(keep, write)?;
        if !mask[t] {
            ct = tape.scale(ct, T::zero())?;
        }
        c = ct;
        h_rows.push(tape.mul(ot, c)?);
    }
    let h = tape.concat_rows(&h_rows)?;
    if time_reversed {
        tape.reverse_time(h)
    } else {
        Ok(h)
    }
}

pub fn qqlstm_layer<T: Real>(
    tape: &mut Tape<T>,
    lp: &LoadedParams,
    cfg: &ModelConfig,
    x: NodeId,
    mask: &[bool],
    layer: usize,
    dir: Direction,
) -> Result<NodeId> {
    match dir {
        Direction::Forward => qqlstm_layer_with(tape, lp, cfg, x, mask, layer, "fwd", false),
        Direction::Reverse => qqlstm_layer_with(tape, lp, cfg, x, mask, layer, "rev", true),
    }
}

/// Bidirectional stack: per layer, forward and reverse outputs are
/// concatenated unit-wise (keeping the packed layout valid) and fed to the
/// next layer. Dropout masks, when given, multiply each layer's output.
pub fn biqqlstm_stack<T: Real>(
    tape: &mut Tape<T>,
    lp: &LoadedParams,
    cfg: &ModelConfig,
    x0: NodeId,
    mask: &[bool],
    dropout_masks: Option<&[Tensor<T>]>,
) -> Result<NodeId> {
    let mut x = x0;
    for layer in 0..cfg.layers {
        let f = qqlstm_layer(tape, lp, cfg, x, mask, layer, Direction::Forward)?;
        let r = qqlstm_layer(tape, lp, cfg, x, mask, layer, Direction::Reverse)?;
        x = tape.concat_packed(f, r)?;
        if let Some(masks) = dropout_masks {
            let m = tape.leaf(masks[layer].clone());
            x = tape.mul(x, m)?;
        }
    }
    Ok(x)
}

pub struct Pooled {
    /// `[1, 3 * stack width]`: mean, max, attention sum, in that order.
    pub v: NodeId,
    /// `[n, 1]` attention weights (for inspection and fairness reporting).
    pub attn_weights: NodeId,
}

/// Three-way pooling over time: masked mean, masked max, and an additive
/// attention readout `softmax_t(v . tanh(W_a x_t))`.
pub fn pool_head<T: Real>(
    tape: &mut Tape<T>,
    lp: &LoadedParams,
    xo: NodeId,
    mask: &[bool],
) -> Result<Pooled> {
    let mean = tape.mean_time(xo, mask.to_vec())?;
    let max = tape.max_time(xo, mask.to_vec())?;
    let proj = tape.matmul(xo, lp.id("attn.w"))?;
    let act = tape.tanh(proj)?;
    let scores = tape.matmul(act, lp.id("attn.v"))?;
    let w = tape.softmax_time(scores, mask.to_vec())?;
    let wt = tape.transpose(w)?;
    let att = tape.matmul(wt, xo)?;
    let v = tape.concat_cols(&[mean, max, att])?;
    Ok(Pooled {
        v,
        attn_weights: w,
    })
}

/// Output MLP: relu hidden layers, final 1-unit sigmoid.
pub fn classify<T: Real>(
    tape: &mut Tape<T>,
    lp: &LoadedParams,
    hidden_layers: usize,
    v: NodeId,
) -> Result<NodeId> {
    let mut cur = v;
    for i in 0..hidden_layers {
        let w = lp.id(&format!("mlp.{i}.w"));
        let b = lp.id(&format!("mlp.{i}.b"));
        let lin = tape.matmul(cur, w)?;
        let lin = tape.add_bias(lin, b)?;
        cur = tape.relu(lin)?;
    }
    let w = lp.id(&format!("mlp.{hidden_layers}.w"));
    let b = lp.id(&format!("mlp.{hidden_layers}.b"));
    let lin = tape.matmul(cur, w)?;
    let lin = tape.add_bias(lin, b)?;
    tape.sigmoid(lin)
}

pub struct ForwardOut {
    /// `[1, 1]` probability of the positive class.
    pub prob: NodeId,
    pub pooled: NodeId,
    pub attn_weights: NodeId,
    pub stack_out: NodeId,
}

/// Full classifier graph over one token-id sequence. Id `PAD_ID` marks
/// padding; at least one non-padding token is required.
pub fn forward_ids<T: Real>(
    tape: &mut Tape<T>,
    lp: &LoadedParams,
    cfg: &ModelConfig,
    ids: &[usize],
    dropout_masks: Option<&[Tensor<T>]>,
) -> Result<ForwardOut> {
    if ids.is_empty() {
        return Err(CoreError::EmptySequence);
    }
    let mask: Vec<bool> = ids.iter().map(|&i| i != PAD_ID).collect();
    if !mask.iter().any(|&m| m) {
        return Err(CoreError::EmptySequence);
    }
    let emb = tape.gather(lp.id("embed"), ids.to_vec())?;
    let stack_out = biqqlstm_stack(tape, lp, cfg, emb, &mask, dropout_masks)?;
    let pooled = pool_head(tape, lp, stack_out, &mask)?;
    let prob = classify(tape, lp, cfg.mlp_dims.len(), pooled.v)?;
    Ok(ForwardOut {
        prob,
        pooled: pooled.v,
        attn_weights: pooled.attn_weights,
        stack_out,
    })
}

/// Convenience: run the classifier outside training and return the scalar
/// probability.
pub fn predict<T: Real>(params: &ModelParams<T>, cfg: &ModelConfig, ids: &[usize]) -> Result<T> {
    let mut tape = Tape::new();
    let lp = LoadedParams::load(&mut tape, params);
    let out = forward_ids(&mut tape, &lp, cfg, ids, None)?;
    Ok(tape.value(out.prob).item())
}
