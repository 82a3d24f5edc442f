use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{AuthError, Gf2Field};
use crate::bits::BitString;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct HashFamilyParams {
    pub message_bits: usize,
    pub tag_bits: usize,
    pub key_bits: usize,
    pub delta: f64,
}

impl HashFamilyParams {
    /// `l_K = 2 floor(l_T + log2(n / l_T) + 1)` and `delta = 2^(1 - l_T)`.
    pub fn new(n: usize, l_t: usize) -> Result<Self, AuthError> {
        if l_t == 0 || n < l_t {
            return Err(AuthError::InvalidHashParams { n, l_t });
        }
        Gf2Field::new(l_t as u32).map_err(|_| AuthError::UnsupportedTagLength(l_t))?;
        // floor(log2(n / l_T)) is the largest j with l_T * 2^j <= n
        let mut j = 0;
        while l_t << (j + 1) <= n {
            j += 1;
        }
        Ok(Self { message_bits: n, tag_bits: l_t, key_bits: 2 * (l_t + j + 1), delta: 2f64.powi(1 - l_t as i32) })
    }

    pub fn field(&self) -> Gf2Field {
        Gf2Field::new(self.tag_bits as u32).expect("checked at construction")
    }

    /// Blocks after padding a message of `len` bits.
    pub fn blocks_for(&self, len: usize) -> usize {
        len / self.tag_bits + 1
    }
}

fn bits_value(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

/// `T = k2 + sum_i m_i k1^i` over GF(2^l_T). `k1` and `k2` are the first
/// `l_T` bits of the two key halves; the message gets a `1` appended and is
/// zero-filled to a whole number of blocks.
pub fn hash_tag(params: &HashFamilyParams, key: &BitString, message: &BitString) -> Result<BitString, AuthError> {
    if key.len() != params.key_bits {
        return Err(AuthError::KeyLength { expected: params.key_bits, got: key.len() });
    }
    if message.len() > params.message_bits {
        return Err(AuthError::MessageTooLong { max: params.message_bits, got: message.len() });
    }
    let f = params.field();
    let l = params.tag_bits;
    let half = params.key_bits / 2;
    let k1 = bits_value(&key.as_slice()[..l]);
    let k2 = bits_value(&key.as_slice()[half..half + l]);

    let mut padded = message.as_slice().to_vec();
    padded.push(true);
    padded.resize(params.blocks_for(message.len()) * l, false);

    let blocks: Vec<u64> = padded.chunks(l).map(bits_value).collect();
    Ok(BitString::from_u64(evaluate(&f, k1, k2, &blocks), l).expect("field element fits l_T bits"))
}

/// `k2 + sum_{i >= 1} blocks[i-1] k1^i`.
pub fn evaluate(f: &Gf2Field, k1: u64, k2: u64, blocks: &[u64]) -> u64 {
    // Horner from the highest power down: acc = (acc + m_i) k1
    let mut acc = 0u64;
    for &b in blocks.iter().rev() {
        acc = f.mul(acc ^ b, k1);
    }
    acc ^ k2
}

/// `max over m != m', t, t' of Pr_K[h(m) = t and h(m') = t']` by enumerating
/// every key. Only sensible for small key lengths.
pub fn max_pair_probability(params: &HashFamilyParams, messages: &[BitString]) -> Result<f64, AuthError> {
    let keys = 1u64 << params.key_bits;
    let tags = 1usize << params.tag_bits;
    let mut table = vec![0usize; messages.len() * keys as usize];
    for k in 0..keys {
        let key = BitString::from_u64(k, params.key_bits).expect("fits");
        for (j, m) in messages.iter().enumerate() {
            table[j * keys as usize + k as usize] = hash_tag(params, &key, m)?.to_u64() as usize;
        }
    }
    let mut worst = 0u64;
    let mut counts = vec![0u64; tags * tags];
    for a in 0..messages.len() {
        for b in 0..messages.len() {
            if a == b {
                continue;
            }
            counts.iter_mut().for_each(|c| *c = 0);
            for k in 0..keys as usize {
                counts[table[a * keys as usize + k] * tags + table[b * keys as usize + k]] += 1;
            }
            worst = worst.max(*counts.iter().max().unwrap());
        }
    }
    Ok(worst as f64 / keys as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_params_examples() {
        let p = HashFamilyParams::new(1024, 32).unwrap();
        assert_eq!((p.key_bits, p.delta), (76, 2f64.powi(-31)));
        let p = HashFamilyParams::new(8, 8).unwrap();
        assert_eq!((p.key_bits, p.delta), (18, 2f64.powi(-7)));
        let p = HashFamilyParams::new(6, 3).unwrap();
        assert_eq!((p.key_bits, p.delta), (10, 0.25));
        assert_eq!(HashFamilyParams::new(2, 3), Err(AuthError::InvalidHashParams { n: 2, l_t: 3 }));
        assert_eq!(HashFamilyParams::new(100, 12), Err(AuthError::UnsupportedTagLength(12)));
    }

    #[test]
    fn key_length_matches_float_formula() {
        for l_t in [3usize, 4, 8, 16, 32] {
            for n in l_t..600 {
                let p = HashFamilyParams::new(n, l_t).unwrap();
                let float = 2 * (l_t as f64 + (n as f64 / l_t as f64).log2() + 1.0).floor() as usize;
                assert_eq!(p.key_bits, float, "n = {n}, l_T = {l_t}");
            }
        }
    }

    #[test]
    fn degenerate_keys_give_k2() {
        let p = HashFamilyParams::new(6, 3).unwrap();
        let key = BitString::from_binary("000_11_101_01").unwrap();
        let k2 = BitString::from_binary("101").unwrap();
        for m in 0..64u64 {
            let msg = BitString::from_u64(m, 6).unwrap();
            assert_eq!(hash_tag(&p, &key, &msg).unwrap(), k2);
        }
        for d in [3u32, 8, 16] {
            let f = Gf2Field::new(d).unwrap();
            assert_eq!(evaluate(&f, 0x5, 0x3, &[0, 0, 0, 0]), 0x3);
        }
        let key = BitString::random(&mut rand::rng(), 10);
        let zero = BitString::zeros(6);
        let k1_only = BitString::from_bools(key.as_slice()[..3].to_vec());
        let tag = hash_tag(&p, &key, &zero).unwrap();
        // zero message still carries the padding block, so the tag is k2 + k1^3
        let f = p.field();
        let k1 = k1_only.to_u64();
        let k2 = BitString::from_bools(key.as_slice()[5..8].to_vec()).to_u64();
        assert_eq!(tag.to_u64(), k2 ^ f.mul(f.mul(k1, k1), f.mul(k1, 4)));
    }

    #[test]
    fn rejects_bad_lengths() {
        let p = HashFamilyParams::new(6, 3).unwrap();
        assert_eq!(
            hash_tag(&p, &BitString::zeros(9), &BitString::zeros(6)),
            Err(AuthError::KeyLength { expected: 10, got: 9 })
        );
        assert_eq!(
            hash_tag(&p, &BitString::zeros(10), &BitString::zeros(7)),
            Err(AuthError::MessageTooLong { max: 6, got: 7 })
        );
    }

    #[test]
    fn padding_separates_prefixes() {
        let p = HashFamilyParams::new(64, 8).unwrap();
        let key = BitString::from_hex("0123456789abcdef0123").unwrap();
        let key = BitString::from_bools(key.as_slice()[..p.key_bits].to_vec());
        let a = BitString::from_binary("1010").unwrap();
        let b = BitString::from_binary("10100").unwrap();
        assert_ne!(hash_tag(&p, &key, &a).unwrap(), hash_tag(&p, &key, &b).unwrap());
    }

    #[test]
    fn strongly_universal_on_full_length_messages() {
        let p = HashFamilyParams::new(6, 3).unwrap();
        let msgs: Vec<BitString> = (0..64).map(|m| BitString::from_u64(m, 6).unwrap()).collect();
        let worst = max_pair_probability(&p, &msgs).unwrap();
        assert!(worst <= p.delta * 2f64.powi(-3), "{worst}");
    }
}
