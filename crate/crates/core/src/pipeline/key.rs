use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Seeds shared by sender and receiver. `rng_seed` only drives the ±1
/// directions and is never needed for extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StegoKey {
    pub partition_seed: u64,
    pub lattice_seed: u64,
    pub perm_seed: u64,
    pub hhat_seed: u64,
    pub rng_seed: u64,
}

fn derive(label: &str, material: &[u8]) -> u64 {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update([0u8]);
    h.update(material);
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

impl StegoKey {
    /// Derives all seeds from arbitrary key material.
    pub fn from_bytes(material: &[u8]) -> Self {
        Self {
            partition_seed: derive("partition", material),
            lattice_seed: derive("lattice", material),
            perm_seed: derive("perm", material),
            hhat_seed: derive("hhat", material),
            rng_seed: derive("rng", material),
        }
    }

    pub fn from_hex(hex_key: &str) -> Result<Self> {
        let bytes = hex::decode(hex_key.trim()).map_err(|e| Error::InvalidArgument(format!("bad hex key: {e}")))?;
        if bytes.is_empty() {
            return Err(Error::InvalidArgument("key is empty".into()));
        }
        Ok(Self::from_bytes(&bytes))
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::from_bytes(&seed.to_le_bytes())
    }

    /// Seed for the submatrix of subimage `s`.
    pub(crate) fn hhat_key(&self, s: usize) -> u64 {
        self.hhat_seed ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}
