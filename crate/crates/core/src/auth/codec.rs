use num_bigint::BigUint;
use num_traits::{One, Zero};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::AuthError;
use crate::bits::BitString;

/// Constant-weight codebook: `2 l_C + 2` bits, both endpoints set and `l_C`
/// of the interior bits set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct CodecParams {
    pub key_bits: usize,
    pub half_length: usize,
    pub code_length: usize,
    pub interior_weight: usize,
    /// `binom[c][i] = C(c, i)` for `c <= 2 l_C`, `i <= l_C`.
    #[serde(skip)]
    binom: Vec<Vec<BigUint>>,
}

pub type Codeword = BitString;

fn binomial_table(rows: usize, cols: usize) -> Vec<Vec<BigUint>> {
    let mut t = vec![vec![BigUint::zero(); cols + 1]; rows + 1];
    for c in 0..=rows {
        t[c][0] = BigUint::one();
        for i in 1..=cols.min(c) {
            t[c][i] = &t[c - 1][i - 1] + &t[c - 1][i];
        }
    }
    t
}

impl CodecParams {
    /// The smallest `l_C` with `C(2 l_C, l_C) > 2^l_K`.
    pub fn new(l_k: usize) -> Result<Self, AuthError> {
        if l_k == 0 {
            return Err(AuthError::EmptyKey);
        }
        let keys = BigUint::one() << l_k;
        let mut l_c = 1usize;
        // C(2m, m) from C(2m-2, m-1) via the ratio 2(2m-1)/m
        let mut central = BigUint::from(2u32);
        while central <= keys {
            l_c += 1;
            central = central * BigUint::from(2 * (2 * l_c - 1)) / BigUint::from(l_c);
        }
        Ok(Self {
            key_bits: l_k,
            half_length: l_c,
            code_length: 2 * l_c + 2,
            interior_weight: l_c,
            binom: binomial_table(2 * l_c, l_c),
        })
    }

    pub fn codebook_size(&self) -> &BigUint {
        &self.binom[2 * self.half_length][self.half_length]
    }

    /// Colex unranking of `value(K)` into a weight-`l_C` interior subset.
    pub fn encode(&self, key: &BitString) -> Result<Codeword, AuthError> {
        if key.len() != self.key_bits {
            return Err(AuthError::KeyLength { expected: self.key_bits, got: key.len() });
        }
        let mut rank = key.to_uint();
        if &rank >= self.codebook_size() {
            return Err(AuthError::RankOverflow);
        }
        let mut cw = BitString::zeros(self.code_length);
        cw.set(0, true);
        cw.set(self.code_length - 1, true);
        let mut c = 2 * self.half_length;
        for i in (1..=self.half_length).rev() {
            // largest c with C(c, i) <= rank
            c -= 1;
            while self.binom[c][i] > rank {
                c -= 1;
            }
            rank -= &self.binom[c][i];
            cw.set(1 + c, true);
        }
        Ok(cw)
    }

    /// Checks the endpoint and weight conditions only.
    pub fn tamper_check(&self, cw: &Codeword) -> bool {
        cw.len() == self.code_length
            && cw.get(0) == Some(true)
            && cw.get(self.code_length - 1) == Some(true)
            && cw.hamming_weight() == self.half_length + 2
    }

    pub fn decode(&self, cw: &Codeword) -> Result<BitString, AuthError> {
        if cw.len() != self.code_length {
            return Err(AuthError::MalformedCodeword(format!("length {} != {}", cw.len(), self.code_length)));
        }
        if !self.tamper_check(cw) {
            return Err(AuthError::MalformedCodeword(format!(
                "endpoints or weight wrong: {} (weight {}, expected {})",
                cw,
                cw.hamming_weight(),
                self.half_length + 2
            )));
        }
        let mut rank = BigUint::zero();
        let interior = &cw.as_slice()[1..self.code_length - 1];
        for (i, c) in interior.iter().enumerate().filter(|(_, &b)| b).map(|(c, _)| c).enumerate() {
            rank += &self.binom[c][i + 1];
        }
        BitString::from_uint(&rank, self.key_bits)
            .map_err(|_| AuthError::MalformedCodeword(format!("{cw} ranks outside the {}-bit key space", self.key_bits)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> BitString {
        BitString::from_binary(s).unwrap()
    }

    #[test]
    fn params_examples() {
        for (l_k, l_c) in [(1, 2), (2, 2), (4, 3), (8, 6), (12, 8)] {
            let p = CodecParams::new(l_k).unwrap();
            assert_eq!(p.half_length, l_c, "l_K = {l_k}");
            assert_eq!(p.code_length, 2 * l_c + 2);
        }
        assert_eq!(CodecParams::new(0), Err(AuthError::EmptyKey));
    }

    #[test]
    fn half_length_is_minimal() {
        for l_k in 1..200 {
            let p = CodecParams::new(l_k).unwrap();
            let keys = BigUint::one() << l_k;
            assert!(p.codebook_size() > &keys);
            let smaller = binomial_table(2 * p.half_length - 2, p.half_length - 1);
            assert!(smaller[2 * p.half_length - 2][p.half_length - 1] <= keys);
        }
    }

    #[test]
    fn rank_zero_example() {
        let p = CodecParams::new(2).unwrap();
        let cw = p.encode(&key("00")).unwrap();
        assert_eq!(cw.to_binary(), "111001");
        assert_eq!(p.decode(&key("111001")).unwrap(), key("00"));
        let all: Vec<String> = ["00", "01", "10", "11"].iter().map(|k| p.encode(&key(k)).unwrap().to_binary()).collect();
        assert_eq!(all, ["111001", "110101", "101101", "110011"]);
    }

    #[test]
    fn malformed_codewords() {
        let p = CodecParams::new(2).unwrap();
        assert!(matches!(p.decode(&key("111101")), Err(AuthError::MalformedCodeword(_))));
        assert!(matches!(p.decode(&key("011011")), Err(AuthError::MalformedCodeword(_))));
        assert!(matches!(p.decode(&key("11101")), Err(AuthError::MalformedCodeword(_))));
        // weight-correct but beyond the 4 keys: ranks 4 and 5
        assert!(matches!(p.decode(&key("101011")), Err(AuthError::MalformedCodeword(_))));
        assert!(matches!(p.decode(&key("100111")), Err(AuthError::MalformedCodeword(_))));
    }

    #[test]
    fn large_key_round_trip() {
        let p = CodecParams::new(76).unwrap();
        let mut rng = rand::rng();
        for _ in 0..200 {
            let k = BitString::random(&mut rng, 76);
            let cw = p.encode(&k).unwrap();
            assert!(p.tamper_check(&cw));
            assert_eq!(p.decode(&cw).unwrap(), k);
        }
    }
}
