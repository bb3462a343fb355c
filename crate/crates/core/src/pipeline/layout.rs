use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{CoefficientImage, BLOCK_LEN};
use crate::vrcstc::cover_bit;
use crate::{Error, Result};

/// Keyed split of `num_blocks` block indices into `subimages` equal groups.
pub fn partition_blocks(num_blocks: usize, subimages: usize, partition_seed: u64) -> Result<Vec<Vec<usize>>> {
    if subimages == 0 || num_blocks == 0 || !num_blocks.is_multiple_of(subimages) {
        return Err(Error::InvalidArgument(format!("{num_blocks} blocks cannot be split into {subimages} equal groups")));
    }
    let mut idx: Vec<usize> = (0..num_blocks).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(partition_seed));
    Ok(idx.chunks(num_blocks / subimages).map(|c| c.to_vec()).collect())
}

/// Ordered AC positions of one subimage with the cover bits read from an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    pub positions: Vec<usize>,
    pub bits: Vec<u8>,
    /// Nonzero AC coefficients among `positions`.
    pub nonzero_ac: usize,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Message bits this subimage carries at `payload` bits per nonzero AC.
    pub fn capacity(&self, payload: f64) -> usize {
        (payload * self.nonzero_ac as f64).floor() as usize
    }
}

/// All 63 AC positions of `blocks`, in keyed order. `stream` separates the
/// orderings of different subimages under one seed.
pub fn build_lattice(blocks: &[usize], ci: &CoefficientImage, lattice_seed: u64, stream: u64) -> Lattice {
    let mut positions: Vec<usize> = blocks
        .iter()
        .flat_map(|&b| (1..BLOCK_LEN).map(move |m| b * BLOCK_LEN + m))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(lattice_seed);
    rng.set_stream(stream);
    positions.shuffle(&mut rng);
    let bits = positions.iter().map(|&p| cover_bit(ci.get(p))).collect();
    let nonzero_ac = positions.iter().filter(|&&p| ci.get(p) != 0).count();
    Lattice {
        positions,
        bits,
        nonzero_ac,
    }
}

/// Sizes of `parts` consecutive pieces of `total`; the first `total % parts` get one extra.
pub fn split_sizes(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}
