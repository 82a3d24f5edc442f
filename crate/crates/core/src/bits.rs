//! Bitstrings with a fixed big-endian convention: index 0 is the leftmost bit
//! and the most significant bit of the integer value.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;
use schemars::{json_schema, JsonSchema, Schema, SchemaGenerator};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid binary digit {0:?}")]
    InvalidBinary(char),
    #[error("invalid hex digit {0:?}")]
    InvalidHex(char),
    #[error("value needs more than {0} bits")]
    Overflow(usize),
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Self((0..len).map(|_| rng.random::<bool>()).collect())
    }

    /// Parses a string of `0`/`1` characters. Underscores are ignored.
    pub fn from_binary(s: &str) -> Result<Self, BitsError> {
        s.chars()
            .filter(|c| *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::InvalidBinary(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    /// Parses hex, four bits per digit, leftmost digit first. An optional
    /// `0x` prefix is accepted.
    pub fn from_hex(s: &str) -> Result<Self, BitsError> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let mut bits = Vec::with_capacity(s.len() * 4);
        for c in s.chars() {
            let d = c.to_digit(16).ok_or(BitsError::InvalidHex(c))?;
            for shift in (0..4).rev() {
                bits.push((d >> shift) & 1 == 1);
            }
        }
        Ok(Self(bits))
    }

    /// Big-endian encoding of `value` in exactly `len` bits.
    pub fn from_uint(value: &BigUint, len: usize) -> Result<Self, BitsError> {
        if value.bits() as usize > len {
            return Err(BitsError::Overflow(len));
        }
        Ok(Self((0..len).map(|i| value.bit((len - 1 - i) as u64)).collect()))
    }

    pub fn from_u64(value: u64, len: usize) -> Result<Self, BitsError> {
        Self::from_uint(&BigUint::from(value), len)
    }

    pub fn to_uint(&self) -> BigUint {
        let mut v = BigUint::zero();
        for &b in &self.0 {
            v <<= 1u32;
            if b {
                v += BigUint::one();
            }
        }
        v
    }

    /// Value of the first `min(len, 64)` bits read big-endian.
    pub fn to_u64(&self) -> u64 {
        self.0.iter().take(64).fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn to_binary(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Hex rendering; the bitstring is left-padded with zeros to a multiple of 4.
    pub fn to_hex(&self) -> String {
        let pad = (4 - self.0.len() % 4) % 4;
        let padded: Vec<bool> = std::iter::repeat_n(false, pad).chain(self.0.iter().copied()).collect();
        padded
            .chunks(4)
            .map(|c| {
                let d = c.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                std::char::from_digit(d, 16).unwrap()
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(parts: &[&BitString]) -> Self {
        let mut out = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            out.extend_from_slice(&p.0);
        }
        Self(out)
    }

    pub fn hamming_weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    /// Packs the bits into bytes, MSB first, zero-padding the final byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i))))
            .collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({})", self.to_binary())
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_binary(s)
    }
}

impl From<Vec<bool>> for BitString {
    fn from(v: Vec<bool>) -> Self {
        Self(v)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_binary())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::from_binary(&s).map_err(serde::de::Error::custom)
    }
}

impl JsonSchema for BitString {
    fn schema_name() -> Cow<'static, str> {
        "BitString".into()
    }

    fn json_schema(_: &mut SchemaGenerator) -> Schema {
        json_schema!({ "type": "string", "pattern": "^[01]*$" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_and_hex_agree() {
        let b = BitString::from_binary("1010_0001").unwrap();
        assert_eq!(b.to_hex(), "a1");
        assert_eq!(BitString::from_hex("0xa1").unwrap(), b);
        assert_eq!(b.to_u64(), 0xa1);
    }

    #[test]
    fn uint_round_trip_is_big_endian() {
        let b = BitString::from_u64(6, 4).unwrap();
        assert_eq!(b.to_binary(), "0110");
        assert_eq!(b.to_uint(), BigUint::from(6u32));
        assert_eq!(BitString::from_u64(16, 4), Err(BitsError::Overflow(4)));
    }

    #[test]
    fn hex_pads_on_the_left() {
        assert_eq!(BitString::from_binary("11").unwrap().to_hex(), "3");
        assert_eq!(BitString::from_binary("111001").unwrap().to_hex(), "39");
    }

    #[test]
    fn rejects_junk() {
        assert_eq!(BitString::from_binary("012"), Err(BitsError::InvalidBinary('2')));
        assert_eq!(BitString::from_hex("zz"), Err(BitsError::InvalidHex('z')));
    }
}
