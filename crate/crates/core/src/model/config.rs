use serde::{Deserialize, Serialize};

use crate::corpus::VocabularyKind;
use crate::error::{Error, Result};

/// The three token representations; each gets its own conv/deconv stack.
pub type Channel = VocabularyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub enabled: bool,
    pub embed_dim: usize,
    pub filters: usize,
    pub vocab_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub segment_len: usize,
    pub num_classes: usize,
    /// Indexed word, pos, lemma.
    pub channels: [ChannelConfig; 3],
    pub kernel_size: usize,
    pub pool_size: usize,
    pub hidden_size: usize,
    pub seed: u64,
    /// Class names in index order; empty when the classes are unnamed.
    #[serde(default)]
    pub class_labels: Vec<String>,
}

fn channel_index(c: Channel) -> usize {
    match c {
        Channel::Word => 0,
        Channel::Pos => 1,
        Channel::Lemma => 2,
    }
}

impl ModelConfig {
    /// Defaults: M=50, D=(64,16,48), 64 filters per channel, h=3, p=2, E=128.
    pub fn new(num_classes: usize, vocab_sizes: [usize; 3]) -> Self {
        let dims = [64, 16, 48];
        ModelConfig {
            segment_len: 50,
            num_classes,
            channels: [0, 1, 2].map(|i| ChannelConfig {
                enabled: true,
                embed_dim: dims[i],
                filters: 64,
                vocab_size: vocab_sizes[i],
            }),
            kernel_size: 3,
            pool_size: 2,
            hidden_size: 128,
            seed: 0,
            class_labels: Vec::new(),
        }
    }

    pub fn channel(&self, c: Channel) -> &ChannelConfig {
        &self.channels[channel_index(c)]
    }

    pub fn channel_mut(&mut self, c: Channel) -> &mut ChannelConfig {
        &mut self.channels[channel_index(c)]
    }

    pub fn enabled_channels(&self) -> impl Iterator<Item = Channel> + '_ {
        Channel::ALL.into_iter().filter(|&c| self.channel(c).enabled)
    }

    /// Length of the concatenated deconvolved feature vector `X`.
    pub fn feature_len(&self) -> usize {
        self.segment_len * self.enabled_channels().map(|c| self.channel(c).embed_dim).sum::<usize>()
    }

    /// First column of `A` fed by token `m` of channel `c`.
    ///
    /// `X` is laid out channel-major, token-minor: all word tokens, then all
    /// POS tokens, then all lemma tokens, each token a contiguous block of
    /// its channel's embedding size.
    pub fn column_offset(&self, c: Channel, m: usize) -> usize {
        let before: usize = self
            .enabled_channels()
            .take_while(|&o| o != c)
            .map(|o| self.channel(o).embed_dim)
            .sum();
        self.segment_len * before + m * self.channel(c).embed_dim
    }

    /// Name of class `k`, or its index when the classes are unnamed.
    pub fn class_label(&self, k: usize) -> String {
        self.class_labels.get(k).cloned().unwrap_or_else(|| k.to_string())
    }

    pub fn class_index(&self, label: &str) -> Result<usize> {
        if let Some(k) = self.class_labels.iter().position(|l| l == label) {
            return Ok(k);
        }
        match label.parse::<usize>() {
            Ok(k) if self.class_labels.is_empty() && k < self.num_classes => Ok(k),
            _ => Err(Error::UnknownClass(label.to_string())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.segment_len == 0 || self.num_classes == 0 || self.hidden_size == 0 {
            return bad("segment length, class count and hidden size must be at least 1".into());
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return bad(format!("kernel size must be odd, got {}", self.kernel_size));
        }
        if self.pool_size == 0 || self.segment_len % self.pool_size != 0 {
            return bad(format!(
                "pool size {} does not divide segment length {}",
                self.pool_size, self.segment_len
            ));
        }
        if !self.class_labels.is_empty() && self.class_labels.len() != self.num_classes {
            return bad(format!(
                "{} class labels for {} classes",
                self.class_labels.len(),
                self.num_classes
            ));
        }
        if self.enabled_channels().next().is_none() {
            return bad("at least one channel must be enabled".into());
        }
        for c in self.enabled_channels() {
            let ch = self.channel(c);
            if ch.embed_dim == 0 || ch.filters == 0 || ch.vocab_size == 0 {
                return bad(format!("{c:?} channel sizes must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_offsets() {
        let mut cfg = ModelConfig::new(2, [10, 5, 8]);
        cfg.segment_len = 4;
        assert_eq!(cfg.feature_len(), 4 * (64 + 16 + 48));
        assert_eq!(cfg.column_offset(Channel::Word, 0), 0);
        assert_eq!(cfg.column_offset(Channel::Word, 3), 3 * 64);
        assert_eq!(cfg.column_offset(Channel::Pos, 0), 4 * 64);
        assert_eq!(cfg.column_offset(Channel::Lemma, 1), 4 * 80 + 48);
    }

    #[test]
    fn disabling_a_channel_drops_its_columns() {
        let mut cfg = ModelConfig::new(2, [10, 5, 8]);
        let full = cfg.feature_len();
        cfg.channel_mut(Channel::Pos).enabled = false;
        assert_eq!(full - cfg.feature_len(), cfg.segment_len * 16);
        assert_eq!(cfg.column_offset(Channel::Lemma, 0), cfg.segment_len * 64);
        assert_eq!(cfg.column_offset(Channel::Word, 2), 2 * 64);
    }

    #[test]
    fn validation() {
        let ok = ModelConfig::new(3, [10, 5, 8]);
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.kernel_size = 2;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.pool_size = 3;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        for ch in &mut c.channels {
            ch.enabled = false;
        }
        assert!(c.validate().is_err());
    }
}
