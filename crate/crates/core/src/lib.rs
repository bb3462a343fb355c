//! Recompression-robust JPEG steganography.
//!
//! The crate models a JPEG recompression channel directly on quantized DCT
//! coefficients, matches covers to that channel by repeated recompression, and
//! embeds messages with a syndrome-trellis code whose transitions carry both a
//! J-UNIWARD distortion cost and a robustness penalty that is re-evaluated on
//! every tentative stego block.
//!
//! Numeric kernels (DCT, wavelet residuals, cost maps, trellis weights) are
//! generic over [`Scalar`]; the aliases below fix the common `f64` / `f32`
//! instantiations. The channel simulator itself always runs in `f64`, since it
//! stands in for a deployed decoder.

pub mod channel;
pub mod codec;
pub mod distortion;
pub mod ecc;
mod error;
pub mod pipeline;
pub mod robustness;
mod scalar;
pub mod stc;
pub mod vrcstc;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use channel::{ChannelParams, ChannelReport, TcmResult};
pub use codec::{CoefficientImage, QuantTable, SpatialImage};
pub use ecc::{BchCode, PermKey};
pub use pipeline::{EmbedParams, Method, StegoKey};
pub use stc::SubMatrix;

/// Orthonormal 8×8 DCT in double precision.
pub type Dct8f64 = codec::Dct8<f64>;
/// Orthonormal 8×8 DCT in single precision.
pub type Dct8f32 = codec::Dct8<f32>;
/// J-UNIWARD cost map in double precision (the pipeline's working type).
pub type CostMap64 = distortion::CostMap<f64>;
/// J-UNIWARD cost map in single precision.
pub type CostMap32 = distortion::CostMap<f32>;
/// Directional wavelet residuals in double precision.
pub type ResidualSet64 = distortion::ResidualSet<f64>;
/// Binary cover with double-precision flip costs.
pub type BitCover64 = stc::BitCover<f64>;
/// Binary cover with single-precision flip costs.
pub type BitCover32 = stc::BitCover<f32>;
/// Robustness configuration with a double-precision penalty.
pub type RobustnessConfig64 = robustness::RobustnessConfig<f64>;
/// VRCSTC parameters with a double-precision penalty.
pub type VrcstcParams64 = vrcstc::VrcstcParams<f64>;
