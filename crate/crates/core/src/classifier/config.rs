use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One conv → batch-norm → ReLU → 2×2 max-pool block with a 3×3 kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub out_channels: usize,
    /// Convolution stride along (frequency, time).
    pub stride: [usize; 2],
}

impl BlockConfig {
    pub const fn new(out_channels: usize) -> Self {
        Self {
            out_channels,
            stride: [1, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactCnnConfig {
    pub in_channels: usize,
    pub blocks: Vec<BlockConfig>,
    pub num_classes: usize,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl Default for CompactCnnConfig {
    fn default() -> Self {
        Self::with_classes(98)
    }
}

impl CompactCnnConfig {
    /// Four stride-1 blocks of 16, 32, 64 and 128 channels.
    pub fn with_classes(num_classes: usize) -> Self {
        Self {
            in_channels: 3,
            blocks: [16, 32, 64, 128].map(BlockConfig::new).to_vec(),
            num_classes,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }

    /// Smaller network for single-core runs: the first conv strides over time
    /// and the widths are halved.
    pub fn desk(num_classes: usize) -> Self {
        let mut blocks = [8, 16, 32, 64].map(BlockConfig::new).to_vec();
        blocks[0].stride = [1, 2];
        Self {
            blocks,
            ..Self::with_classes(num_classes)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::param(format!("need at least 2 classes, got {}", self.num_classes)));
        }
        if self.blocks.is_empty() || self.in_channels == 0 {
            return Err(Error::param("network needs input channels and at least one block"));
        }
        for b in &self.blocks {
            if b.out_channels == 0 || b.stride[0] == 0 || b.stride[1] == 0 {
                return Err(Error::param(format!("invalid block {b:?}")));
            }
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum <= 1.0) || !(self.bn_eps > 0.0) {
            return Err(Error::param("invalid batch-norm settings"));
        }
        Ok(())
    }

    /// Spatial size after each block for an `h × w` input, or an error if a
    /// block would reduce a side to zero.
    pub fn block_shapes(&self, h: usize, w: usize) -> Result<Vec<(usize, usize, usize, usize)>> {
        // (conv_h, conv_w, pooled_h, pooled_w)
        let (mut h, mut w) = (h, w);
        let mut out = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            if h == 0 || w == 0 {
                break;
            }
            let ch = (h - 1) / b.stride[0] + 1;
            let cw = (w - 1) / b.stride[1] + 1;
            let (ph, pw) = (ch / 2, cw / 2);
            if ph == 0 || pw == 0 {
                let (mh, mw) = self.min_input();
                return Err(Error::param(format!(
                    "input {h}x{w} too small at block {}; minimum is {mh}x{mw}",
                    out.len()
                )));
            }
            out.push((ch, cw, ph, pw));
            h = ph;
            w = pw;
        }
        Ok(out)
    }

    /// Smallest accepted (height, width).
    pub fn min_input(&self) -> (usize, usize) {
        let (mut h, mut w) = (1usize, 1usize);
        for b in self.blocks.iter().rev() {
            // pooled side 1 needs conv side 2, which needs input side stride + 1
            h = (2 * h - 1) * b.stride[0] + 1;
            w = (2 * w - 1) * b.stride[1] + 1;
        }
        (h, w)
    }

    /// Trainable parameter count.
    pub fn param_count(&self) -> usize {
        let mut c_in = self.in_channels;
        let mut n = 0;
        for b in &self.blocks {
            n += b.out_channels * c_in * 9 + 2 * b.out_channels;
            c_in = b.out_channels;
        }
        n + self.num_classes * c_in + self.num_classes
    }
}
