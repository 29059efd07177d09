use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Channel, ModelConfig};
use crate::corpus::PAD_INDEX;
use crate::error::{Error, Result};
use crate::grad::{ParamId, ParamSet, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelParams {
    pub embedding: ParamId,
    pub conv_weight: ParamId,
    pub conv_bias: ParamId,
    pub deconv_weight: ParamId,
    pub deconv_bias: ParamId,
}

/// `y = d + C relu(b + A X)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseHead {
    pub a: ParamId,
    pub b: ParamId,
    pub c: ParamId,
    pub d: ParamId,
}

/// All trainable tensors of a model together with typed handles.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub set: ParamSet,
    channels: [Option<ChannelParams>; 3],
    pub head: DenseHead,
}

fn channel_slot(c: Channel) -> usize {
    Channel::ALL.iter().position(|&o| o == c).unwrap()
}

pub(crate) fn channel_name(c: Channel) -> &'static str {
    match c {
        Channel::Word => "word",
        Channel::Pos => "pos",
        Channel::Lemma => "lemma",
    }
}

/// Parameter names and shapes in creation order, with Glorot fans
/// (`None` for biases).
pub(crate) fn layout(config: &ModelConfig) -> Vec<(String, Vec<usize>, Option<(usize, usize)>)> {
    let h = config.kernel_size;
    let mut out = Vec::new();
    for c in config.enabled_channels() {
        let ch = config.channel(c);
        let n = channel_name(c);
        let (v, d, f) = (ch.vocab_size, ch.embed_dim, ch.filters);
        out.push((format!("{n}.embedding"), vec![v, d], Some((v, d))));
        out.push((format!("{n}.conv.weight"), vec![f, h, d], Some((h * d, h * f))));
        out.push((format!("{n}.conv.bias"), vec![f], None));
        out.push((format!("{n}.deconv.weight"), vec![f, h, d], Some((h * f, h * d))));
        out.push((format!("{n}.deconv.bias"), vec![d], None));
    }
    let (e, p, k) = (config.hidden_size, config.feature_len(), config.num_classes);
    out.push(("head.A".into(), vec![e, p], Some((p, e))));
    out.push(("head.b".into(), vec![e], None));
    out.push(("head.C".into(), vec![k, e], Some((e, k))));
    out.push(("head.d".into(), vec![k], None));
    out
}

impl ModelParams {
    /// Glorot-uniform weights `U(±sqrt(6/(fan_in+fan_out)))`, zero biases,
    /// drawn from a generator seeded with `config.seed`. The PAD row of
    /// every embedding starts at zero; training keeps it there.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let tensors = layout(config)
            .into_iter()
            .map(|(name, shape, fans)| {
                let mut t = Tensor::zeros(&shape);
                if let Some((fan_in, fan_out)) = fans {
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    t.data_mut()
                        .iter_mut()
                        .for_each(|x| *x = rng.gen_range(-limit..limit));
                }
                if name.ends_with(".embedding") {
                    let dim = shape[1];
                    t.data_mut()[PAD_INDEX * dim..(PAD_INDEX + 1) * dim].fill(0.0);
                }
                (name, t)
            })
            .collect();
        Self::from_tensors(config, tensors)
    }

    /// Assembles parameters from named tensors, checking every expected
    /// tensor is present with the shape `config` implies.
    pub fn from_tensors(config: &ModelConfig, tensors: Vec<(String, Tensor)>) -> Result<Self> {
        config.validate()?;
        let mut by_name: std::collections::HashMap<String, Tensor> = tensors.into_iter().collect();
        let mut set = ParamSet::new();
        for (name, shape, _) in layout(config) {
            let t = by_name
                .remove(&name)
                .ok_or_else(|| Error::Corrupted(format!("missing tensor `{name}`")))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::Shape {
                    tensor: name,
                    expected: shape,
                    found: t.shape().to_vec(),
                });
            }
            set.add(name, t);
        }
        if let Some(extra) = by_name.keys().next() {
            return Err(Error::Corrupted(format!("unexpected tensor `{extra}`")));
        }
        let id = |name: String| set.find(&name).expect("tensor registered above");
        let mut channels = [None; 3];
        for c in config.enabled_channels() {
            let n = channel_name(c);
            channels[channel_slot(c)] = Some(ChannelParams {
                embedding: id(format!("{n}.embedding")),
                conv_weight: id(format!("{n}.conv.weight")),
                conv_bias: id(format!("{n}.conv.bias")),
                deconv_weight: id(format!("{n}.deconv.weight")),
                deconv_bias: id(format!("{n}.deconv.bias")),
            });
        }
        let head = DenseHead {
            a: id("head.A".into()),
            b: id("head.b".into()),
            c: id("head.C".into()),
            d: id("head.d".into()),
        };
        Ok(ModelParams {
            set,
            channels,
            head,
        })
    }

    /// Same handles over a different set of values (e.g. a perturbed copy).
    pub fn with_set(&self, set: ParamSet) -> Result<Self> {
        if set.len() != self.set.len() || self.set.iter().zip(set.iter()).any(|(a, b)| a.1 != b.1 || a.2.shape() != b.2.shape()) {
            return Err(Error::Invalid("parameter set does not match model layout".into()));
        }
        Ok(ModelParams { set, ..self.clone() })
    }

    pub fn channel(&self, c: Channel) -> Option<&ChannelParams> {
        self.channels[channel_slot(c)].as_ref()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        self.set.get(id)
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        self.set.get_mut(id)
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.set.find(name).map(|id| self.set.get(id))
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.set.find(name).map(|id| self.set.get_mut(id))
    }
}
