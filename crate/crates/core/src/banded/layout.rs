use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a block banded matrix: one block row/column per layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    block_sizes: Vec<usize>,
    bandwidth: usize,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(block_sizes: Vec<usize>, bandwidth: usize) -> Result<Self> {
        let l = block_sizes.len();
        if l == 0 {
            return Err(Error::InvalidDimension(
                "at least one layer is required".into(),
            ));
        }
        if let Some(pos) = block_sizes.iter().position(|&b| b == 0) {
            return Err(Error::InvalidDimension(format!(
                "block size of layer {pos} is zero"
            )));
        }
        if bandwidth > l - 1 {
            return Err(Error::InvalidDimension(format!(
                "bandwidth {bandwidth} exceeds num_layers - 1 = {}",
                l - 1
            )));
        }
        let mut offsets = Vec::with_capacity(l + 1);
        let mut acc = 0;
        offsets.push(0);
        for &b in &block_sizes {
            acc += b;
            offsets.push(acc);
        }
        Ok(Self {
            block_sizes,
            bandwidth,
            offsets,
        })
    }

    pub fn uniform(num_layers: usize, block_size: usize, bandwidth: usize) -> Result<Self> {
        if num_layers == 0 || block_size == 0 {
            return Err(Error::InvalidDimension(format!(
                "num_layers ({num_layers}) and block_size ({block_size}) must be positive"
            )));
        }
        Self::new(vec![block_size; num_layers], bandwidth)
    }

    #[inline]
    pub fn num_layers(&self) -> usize {
        self.block_sizes.len()
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Number of block diagonals, `2w + 1`.
    #[inline]
    pub fn num_diagonals(&self) -> usize {
        2 * self.bandwidth + 1
    }

    #[inline]
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    #[inline]
    pub fn block_size(&self, layer: usize) -> usize {
        self.block_sizes[layer]
    }

    /// Scalar row offset of `layer` in the dense realization.
    #[inline]
    pub fn offset(&self, layer: usize) -> usize {
        self.offsets[layer]
    }

    #[inline]
    pub fn total_dim(&self) -> usize {
        self.offsets[self.num_layers()]
    }

    /// The common block size, if all layers share one.
    pub fn uniform_block_size(&self) -> Option<usize> {
        let first = self.block_sizes[0];
        self.block_sizes
            .iter()
            .all(|&b| b == first)
            .then_some(first)
    }

    /// Mean block size, used as `b_s` by the cost models.
    pub fn mean_block_size(&self) -> f64 {
        self.total_dim() as f64 / self.num_layers() as f64
    }

    #[inline]
    pub fn in_band(&self, a: usize, b: usize) -> bool {
        a < self.num_layers() && b < self.num_layers() && a.abs_diff(b) <= self.bandwidth
    }

    /// Same block sizes, different bandwidth.
    pub fn with_bandwidth(&self, bandwidth: usize) -> Result<Self> {
        Self::new(self.block_sizes.clone(), bandwidth)
    }

    /// Sub-layout over a contiguous range of layers.
    pub fn slice(&self, range: std::ops::Range<usize>, bandwidth: usize) -> Result<Self> {
        let sizes = self.block_sizes[range].to_vec();
        let w = bandwidth.min(sizes.len().saturating_sub(1));
        Self::new(sizes, w)
    }
}

/// Uniform layout with `num_layers` blocks of size `block_size`.
pub fn make_layout(num_layers: usize, block_size: usize, bandwidth: usize) -> Result<BlockLayout> {
    BlockLayout::uniform(num_layers, block_size, bandwidth)
}
