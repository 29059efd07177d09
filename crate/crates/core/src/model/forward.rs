use super::config::{Channel, ModelConfig};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::grad::{softmax, Gradients, Tape, Tensor, Var};

/// Deconvolved token features of one channel, `M x D_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFeatures {
    pub channel: Channel,
    pub features: Tensor,
}

/// Every intermediate the explanations need from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Enabled channels in layout order.
    pub channels: Vec<ChannelFeatures>,
    /// Concatenation of all channel features, channel-major, token-minor.
    pub global: Vec<f64>,
    /// `relu(b + A X)`.
    pub hidden: Vec<f64>,
    /// Pre-softmax activations `y`.
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardTrace {
    pub fn features(&self, c: Channel) -> Option<&Tensor> {
        self.channels.iter().find(|f| f.channel == c).map(|f| &f.features)
    }

    pub fn predicted(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) struct ForwardVars {
    pub channels: Vec<(Channel, Var)>,
    pub global: Var,
    pub hidden: Var,
    pub logits: Var,
}

/// Records the full network on `tape`: per channel
/// embed → conv → relu → maxpool → upsample → transpose conv, then the
/// dense head over the concatenated features.
pub(crate) fn build(
    tape: &mut Tape<'_>,
    params: &ModelParams,
    config: &ModelConfig,
    encoded: &[[usize; 3]],
) -> Result<ForwardVars> {
    if encoded.len() != config.segment_len {
        return Err(Error::Shape {
            tensor: "segment".into(),
            expected: vec![config.segment_len, 3],
            found: vec![encoded.len(), 3],
        });
    }
    let mut channels = Vec::with_capacity(3);
    for (slot, c) in Channel::ALL.into_iter().enumerate() {
        if !config.channel(c).enabled {
            continue;
        }
        let p = params
            .channel(c)
            .ok_or_else(|| Error::Config(format!("no parameters for enabled {c:?} channel")))?;
        let indices: Vec<usize> = encoded.iter().map(|t| t[slot]).collect();
        let emb = tape.embedding(Var::Param(p.embedding), &indices)?;
        let conv = tape.conv1d_same(emb, Var::Param(p.conv_weight), Var::Param(p.conv_bias))?;
        let act = tape.relu(conv);
        let pooled = tape.maxpool1d(act, config.pool_size)?;
        let up = tape.upsample(pooled, config.pool_size)?;
        let deconv =
            tape.conv1d_transpose_same(up, Var::Param(p.deconv_weight), Var::Param(p.deconv_bias))?;
        channels.push((c, deconv));
    }
    let vars: Vec<Var> = channels.iter().map(|&(_, v)| v).collect();
    let global = tape.concat(&vars)?;
    let pre = tape.dense(global, Var::Param(params.head.a), Var::Param(params.head.b))?;
    let hidden = tape.relu(pre);
    let logits = tape.dense(hidden, Var::Param(params.head.c), Var::Param(params.head.d))?;
    Ok(ForwardVars {
        channels,
        global,
        hidden,
        logits,
    })
}

pub fn forward(params: &ModelParams, config: &ModelConfig, encoded: &[[usize; 3]]) -> Result<ForwardTrace> {
    let mut tape = Tape::new(&params.set);
    let vars = build(&mut tape, params, config, encoded)?;
    let logits = tape.value(vars.logits).data().to_vec();
    Ok(ForwardTrace {
        channels: vars
            .channels
            .iter()
            .map(|&(channel, v)| ChannelFeatures {
                channel,
                features: tape.value(v).clone(),
            })
            .collect(),
        global: tape.value(vars.global).data().to_vec(),
        hidden: tape.value(vars.hidden).data().to_vec(),
        probs: softmax(&logits),
        logits,
    })
}

/// Cross-entropy of one segment against its one-hot label.
pub fn segment_loss(
    params: &ModelParams,
    config: &ModelConfig,
    encoded: &[[usize; 3]],
    class_index: usize,
) -> Result<f64> {
    let mut tape = Tape::new(&params.set);
    let vars = build(&mut tape, params, config, encoded)?;
    let loss = tape.softmax_cross_entropy(vars.logits, &one_hot(config.num_classes, class_index)?)?;
    Ok(tape.value(loss).data()[0])
}

/// Loss and its gradient with respect to every parameter, for one segment.
pub fn segment_gradients(
    params: &ModelParams,
    config: &ModelConfig,
    encoded: &[[usize; 3]],
    class_index: usize,
) -> Result<(f64, Gradients)> {
    let mut tape = Tape::new(&params.set);
    let vars = build(&mut tape, params, config, encoded)?;
    let loss = tape.softmax_cross_entropy(vars.logits, &one_hot(config.num_classes, class_index)?)?;
    let value = tape.value(loss).data()[0];
    Ok((value, tape.backward(loss)?))
}

pub(crate) fn one_hot(k: usize, class_index: usize) -> Result<Vec<f64>> {
    if class_index >= k {
        return Err(Error::OutOfRange {
            what: "class".into(),
            index: class_index,
            size: k,
        });
    }
    let mut z = vec![0.0; k];
    z[class_index] = 1.0;
    Ok(z)
}
