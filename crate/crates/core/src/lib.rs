//! H2DF-(K,1,B) hierarchical 2-D feature codes for multiuser pilot
//! authentication: construction, codeword algebra, feature extraction, the
//! hierarchical decoder, closed-form metrics and a Monte Carlo harness.

pub mod analysis;
pub mod attack;
pub mod codebook;
pub mod codeword;
pub mod decoder;
pub mod error;
pub mod gf;
pub mod harness;
pub mod rng;
pub mod signal;

pub use attack::{make_attack, AttackKind, AttackVector, Strategy};
pub use codebook::{CodeParams, H2dfCodebook};
pub use codeword::{AspVector, BinaryCodeword};
pub use decoder::{hd_decode, AttackMode, CaseTag, DecodeError, DecodeResult};
pub use error::{Error, Result};
pub use gf::{FieldElement, FieldSpec};
pub use signal::{Aggregate, DetectionConfig, DifferentialMatrix};
