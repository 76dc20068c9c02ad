use crate::error::{CoreError, Result};

/// Hyperparameters of the classifier.
///
/// Feature widths are real-valued: the embedding packs `embed_dim / 4`
/// quaternion units, each recurrent direction outputs `4 * hidden` reals
/// (`hidden` quaternion units), and a bidirectional layer therefore emits
/// `8 * hidden` reals.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    /// Embedding width in reals; must be divisible by 4.
    pub embed_dim: usize,
    /// Quaternion units per direction.
    pub hidden: usize,
    pub layers: usize,
    /// Width of the causal gate convolutions, in timesteps.
    pub conv_width: usize,
    /// Hidden widths of the output MLP; the final 1-unit sigmoid layer is
    /// implicit.
    pub mlp_dims: Vec<usize>,
    /// Probability of dropping a unit between recurrent layers.
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 4,
            embed_dim: 16,
            hidden: 4,
            layers: 2,
            conv_width: 2,
            mlp_dims: vec![32],
            dropout: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 4 {
            return Err(CoreError::InvalidConfig(format!(
                "vocab_size {} is below the 4 reserved tokens",
                self.vocab_size
            )));
        }
        if self.embed_dim == 0 || self.embed_dim % 4 != 0 {
            return Err(CoreError::InvalidConfig(format!(
                "embed_dim {} must be a positive multiple of 4",
                self.embed_dim
            )));
        }
        if self.hidden == 0 {
            return Err(CoreError::InvalidConfig("hidden must be >= 1".into()));
        }
        if self.layers == 0 {
            return Err(CoreError::InvalidConfig("layers must be >= 1".into()));
        }
        if self.conv_width == 0 {
            return Err(CoreError::InvalidConfig("conv_width must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(CoreError::InvalidConfig(format!(
                "dropout {} must lie in [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Quaternion units entering layer `l`: the packed embedding for the
    /// first layer, both directions of the previous layer afterwards.
    pub fn in_units(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embed_dim / 4
        } else {
            2 * self.hidden
        }
    }

    /// Real feature width leaving the bidirectional stack.
    pub fn stack_out_dim(&self) -> usize {
        2 * 4 * self.hidden
    }

    /// Width of the pooled vector: mean, max and attention concatenated.
    pub fn pooled_dim(&self) -> usize {
        3 * self.stack_out_dim()
    }

    /// Attention projection width.
    pub fn attn_dim(&self) -> usize {
        4 * self.hidden
    }
}
