//! Authentication primitives: an almost strongly 2-universal polynomial hash
//! over GF(2^l_T) and a constant-weight codec for key transfer.

mod codec;
pub mod gf2;
mod hash;

use thiserror::Error;

pub use codec::{CodecParams, Codeword};
pub use gf2::Gf2Field;
pub use hash::{evaluate, hash_tag, max_pair_probability, HashFamilyParams};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuthError {
    #[error("need n >= l_T >= 1, got n = {n}, l_T = {l_t}")]
    InvalidHashParams { n: usize, l_t: usize },
    #[error("no field table entry for tag length {0}")]
    UnsupportedTagLength(usize),
    #[error("key has {got} bits, expected {expected}")]
    KeyLength { expected: usize, got: usize },
    #[error("message has {got} bits, at most {max} allowed")]
    MessageTooLong { max: usize, got: usize },
    #[error("key length must be at least 1")]
    EmptyKey,
    #[error("key value does not fit the codebook")]
    RankOverflow,
    #[error("malformed codeword: {0}")]
    MalformedCodeword(String),
}
