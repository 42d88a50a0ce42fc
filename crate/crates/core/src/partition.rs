//! Contiguous block structure of the decision vector.

use std::ops::Range;

use crate::error::{Error, Result};

/// Splits a vector of dimension `d` into `n` contiguous blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl BlockPartition {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidPartition("no blocks given".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidPartition(format!("block {pos} has zero dimension")));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in dims {
            offsets.push(total);
            total += d;
        }
        Ok(Self { dims: dims.to_vec(), offsets, total })
    }

    /// Near-equal split: the first `d mod n` blocks get one extra coordinate.
    pub fn even(total: usize, blocks: usize) -> Result<Self> {
        if blocks == 0 || blocks > total {
            return Err(Error::InvalidPartition(format!("cannot split dimension {total} into {blocks} nonempty blocks")));
        }
        let base = total / blocks;
        let extra = total % blocks;
        let dims: Vec<usize> = (0..blocks).map(|i| base + usize::from(i < extra)).collect();
        Self::new(&dims)
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn block_dim(&self, i: usize) -> Result<usize> {
        self.check_block(i)?;
        Ok(self.dims[i])
    }

    pub fn range(&self, i: usize) -> Result<Range<usize>> {
        self.check_block(i)?;
        Ok(self.offsets[i]..self.offsets[i] + self.dims[i])
    }

    /// Coordinates `[offsets[i], offsets[i] + d_i)` of `x`.
    pub fn slice<'a>(&self, x: &'a [f64], i: usize) -> Result<&'a [f64]> {
        self.check_len(x.len())?;
        Ok(&x[self.range(i)?])
    }

    pub fn slice_mut<'a>(&self, x: &'a mut [f64], i: usize) -> Result<&'a mut [f64]> {
        self.check_len(x.len())?;
        let range = self.range(i)?;
        Ok(&mut x[range])
    }

    /// Index of the block containing coordinate `j`.
    pub fn block_of(&self, j: usize) -> Option<usize> {
        if j >= self.total {
            return None;
        }
        Some(self.offsets.partition_point(|&o| o <= j) - 1)
    }

    pub(crate) fn check_block(&self, i: usize) -> Result<()> {
        if i >= self.dims.len() {
            return Err(Error::BlockOutOfRange { index: i, blocks: self.dims.len() });
        }
        Ok(())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.total {
            return Err(Error::DimensionMismatch { expected: self.total, got: len });
        }
        Ok(())
    }
}
