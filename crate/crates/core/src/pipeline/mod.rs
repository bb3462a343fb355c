//! End-to-end embedding and extraction, plus the evaluation harness.
//!
//! Embedding: channel-match the cover, frame and BCH-encode the message,
//! permute the coded bits, split them over keyed subimages and run one trellis
//! per subimage. Extraction rebuilds the same layout from the key and the image
//! dimensions alone.

mod embed;
mod eval;
mod key;
mod layout;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use embed::{
    embed, embed_prepared, extract, extract_detailed, frame_message, prepare_cover, received_coded_bits, Cover, EmbedReport, ExtractOutcome,
    ExtractStats, Extraction, PreparedCover, SubimageReport, TcmSummary,
};
pub use eval::{cosine_similarity, evaluate, pe_min, EvalCell, EvalConfig, EvalReport, ImageEval, REPORT_VERSION};
pub use key::StegoKey;
pub use layout::{build_lattice, partition_blocks, split_sizes, Lattice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Trellis with the robustness penalty.
    Rsvrc,
    /// Plain trellis over the same cover and costs.
    Baseline,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rsvrc => "rsvrc",
            Method::Baseline => "baseline",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rsvrc" | "vrcstc" => Ok(Method::Rsvrc),
            "baseline" | "stc" | "plain-stc" => Ok(Method::Baseline),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedParams {
    /// Bits per nonzero AC coefficient.
    pub payload: f64,
    /// Channel quality factor.
    pub quality: u32,
    /// Cap on channel-matching passes.
    pub max_tcm_iters: usize,
    /// Trellis constraint height.
    pub h: usize,
    /// BCH message length; the block length is always 127.
    pub bch_k: usize,
    pub subimages: usize,
    pub method: Method,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self {
            payload: 0.1,
            quality: 85,
            max_tcm_iters: crate::channel::DEFAULT_MAX_TCM_ITERS,
            h: 3,
            bch_k: 64,
            subimages: 16,
            method: Method::Rsvrc,
        }
    }
}

impl EmbedParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.payload > 0.0 && self.payload <= 1.0) {
            return Err(Error::InvalidArgument(format!("payload {} must be in (0, 1]", self.payload)));
        }
        if !(1..=100).contains(&self.quality) {
            return Err(Error::InvalidArgument(format!("quality {} out of range", self.quality)));
        }
        if !(2..=8).contains(&self.h) {
            return Err(Error::InvalidArgument(format!("trellis height {} out of range", self.h)));
        }
        if self.subimages == 0 {
            return Err(Error::InvalidArgument("need at least one subimage".into()));
        }
        Ok(())
    }
}
