//! A toy BB84 run with Cascade reconciliation and Toeplitz privacy
//! amplification. Both parties are simulated side by side; only Bob's
//! classical messages pass through the adversary.

use rand::seq::SliceRandom;
use rand::Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::KexError;
use crate::bits::BitString;
use crate::quantum::binary_entropy;
use crate::trials::stream;

/// Floor on the QBER estimate used to size the first Cascade block.
const MIN_QBER_FOR_BLOCKS: f64 = 0.005;
const VERIFY_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct QkdConfig {
    pub signal_count: usize,
    pub channel_qber: f64,
    pub pe_sample_fraction: f64,
    pub pe_threshold: f64,
    pub ec_passes: usize,
    /// `None` uses `floor(n (1 - 2 h(pe_threshold))) - leak`.
    pub pa_output_bits: Option<usize>,
    /// Security label handed to the bounds; the simulation does not derive it.
    pub eps_qkd_label: f64,
    /// Probability of a forced parameter-estimation abort, for robustness runs.
    pub eps_rob: f64,
}

impl Default for QkdConfig {
    fn default() -> Self {
        Self {
            signal_count: 10_000,
            channel_qber: 0.0,
            pe_sample_fraction: 0.1,
            pe_threshold: 0.05,
            ec_passes: 3,
            pa_output_bits: None,
            eps_qkd_label: 1e-9,
            eps_rob: 0.0,
        }
    }
}

impl QkdConfig {
    pub fn validate(&self) -> Result<(), KexError> {
        let bad = |m: String| Err(KexError::InvalidConfig(m));
        if self.signal_count == 0 {
            return bad("signal_count must be positive".into());
        }
        if !(self.pe_threshold > 0.0 && self.pe_threshold < 0.5) {
            return bad(format!("pe_threshold = {} outside (0, 0.5)", self.pe_threshold));
        }
        if !(self.pe_sample_fraction > 0.0 && self.pe_sample_fraction < 1.0) {
            return bad(format!("pe_sample_fraction = {} outside (0, 1)", self.pe_sample_fraction));
        }
        for (name, p) in [("channel_qber", self.channel_qber), ("eps_qkd_label", self.eps_qkd_label), ("eps_rob", self.eps_rob)]
        {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if self.ec_passes == 0 {
            return bad("ec_passes must be at least 1".into());
        }
        Ok(())
    }
}

/// Everything Alice sends.
#[derive(Debug, Clone, PartialEq, Serialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct AliceMessages {
    pub bases: BitString,
    pub sample_mask: BitString,
    pub sample_bits: BitString,
    pub kept_mask: BitString,
    pub ec_seed: u64,
    pub ec_block: u32,
    pub ec_parities: BitString,
    pub verify_seed: u64,
    pub verify_hash: u64,
    pub pa_seed: u64,
    pub pa_len: u32,
}

impl AliceMessages {
    pub fn to_bits(&self) -> BitString {
        let word = |v: u64, n: usize| BitString::from_u64(v, n).expect("fits");
        BitString::concat(&[
            &self.bases,
            &self.sample_mask,
            &self.sample_bits,
            &self.kept_mask,
            &word(self.ec_seed, 64),
            &word(self.ec_block as u64, 32),
            &self.ec_parities,
            &word(self.verify_seed, 64),
            &word(self.verify_hash, 64),
            &word(self.pa_seed, 64),
            &word(self.pa_len as u64, 32),
        ])
    }
}

/// Everything Bob sends.
#[derive(Debug, Clone, PartialEq, Serialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct BobMessages {
    pub bases: BitString,
    pub sample_bits: BitString,
    pub ec_replies: BitString,
    pub ec_ok: bool,
}

impl BobMessages {
    pub fn to_bits(&self) -> BitString {
        let mut out = BitString::concat(&[&self.bases, &self.sample_bits, &self.ec_replies]);
        out.push(self.ec_ok);
        out
    }
}

/// Bit flips applied to Bob's messages in flight. Indices address the
/// concatenation `bases | sample_bits | ec_ok`; indices past its end do nothing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BobTamper {
    pub indices: Vec<usize>,
}

impl BobTamper {
    fn hits(&self, offset: usize, len: usize) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied().filter(move |&i| i >= offset && i < offset + len).map(move |i| i - offset)
    }

    fn apply(&self, bits: &BitString, offset: usize) -> BitString {
        let mut out = bits.clone();
        for i in self.hits(offset, bits.len()) {
            out.flip(i);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct QkdRun {
    pub alice: AliceMessages,
    pub bob_sent: BobMessages,
    pub bob_received: BobMessages,
    pub qber_a: Option<f64>,
    pub qber_b: Option<f64>,
    pub i_pe_a: bool,
    pub i_pe_b: bool,
    pub sifted_bits: usize,
    pub leak: usize,
    /// Privacy-amplified keys; the protocols decide whether to release them.
    pub key_a: BitString,
    pub key_b: BitString,
    /// Reconciled strings before amplification.
    pub corrected_a: BitString,
    pub corrected_b: BitString,
}

impl QkdRun {
    pub fn bob_tampered(&self) -> bool {
        self.bob_sent != self.bob_received
    }
}

fn select(bits: &[bool], mask: &BitString) -> Vec<bool> {
    bits.iter().zip(mask.iter()).filter(|(_, m)| *m).map(|(&b, _)| b).collect()
}

fn error_rate(x: &BitString, y: &BitString) -> Option<f64> {
    if x.is_empty() || x.len() != y.len() {
        return None;
    }
    Some(x.iter().zip(y.iter()).filter(|(a, b)| a != b).count() as f64 / x.len() as f64)
}

fn verify_hash(seed: u64, bits: &[bool]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((bits.len() as u64).to_le_bytes());
    h.update(BitString::from_bools(bits.to_vec()).to_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Runs the QKD sub-protocol. `tamper` flips bits of Bob's messages on the way
/// to Alice.
pub fn run_toy_qkd(cfg: &QkdConfig, seed: u64, tamper: &BobTamper) -> Result<QkdRun, KexError> {
    cfg.validate()?;
    let n = cfg.signal_count;

    // quantum phase
    let mut r_a = stream(seed, 100);
    let mut r_b = stream(seed, 101);
    let mut r_ch = stream(seed, 102);
    let a: Vec<bool> = (0..n).map(|_| r_a.random()).collect();
    let alpha = BitString::random(&mut r_a, n);
    let beta = BitString::random(&mut r_b, n);
    let b: Vec<bool> = (0..n)
        .map(|i| {
            let flip = r_ch.random_bool(cfg.channel_qber);
            let guess: bool = r_ch.random();
            if alpha.get(i) == beta.get(i) {
                a[i] ^ flip
            } else {
                guess
            }
        })
        .collect();

    // sifting on the bases Alice receives
    let mut r_pe = stream(seed, 104);
    let sample_draws: Vec<bool> = (0..n).map(|_| r_pe.random_bool(cfg.pe_sample_fraction)).collect();
    let beta_hat = tamper.apply(&beta, 0);
    let sifted_a: Vec<bool> = (0..n).map(|i| alpha.get(i) == beta_hat.get(i)).collect();
    let sample_mask = BitString::from_bools((0..n).map(|i| sifted_a[i] && sample_draws[i]).collect());
    let kept_mask = BitString::from_bools((0..n).map(|i| sifted_a[i] && !sample_draws[i]).collect());
    let s = sample_mask.hamming_weight();

    // parameter estimation
    let sample_a = BitString::from_bools(select(&a, &sample_mask));
    let sample_b = BitString::from_bools(select(&b, &sample_mask));
    let sample_b_hat = tamper.apply(&sample_b, n);
    let qber_a = error_rate(&sample_a, &sample_b_hat);
    let qber_b = error_rate(&sample_a, &sample_b);

    // reconciliation on the kept positions
    let mut r_alice = stream(seed, 105);
    let x_a = select(&a, &kept_mask);
    let x_b = select(&b, &kept_mask);
    let ec_seed: u64 = r_alice.random();
    let q_est = qber_a.unwrap_or(0.0).max(MIN_QBER_FOR_BLOCKS);
    let ec_block = ((0.73 / q_est).ceil() as usize).clamp(1, x_a.len().max(1));
    let ec = cascade(&x_a, &x_b, ec_block, cfg.ec_passes, ec_seed);
    let verify_seed: u64 = r_alice.random();
    let vh = verify_hash(verify_seed, &x_a);
    let ec_ok = vh == verify_hash(verify_seed, &ec.corrected);
    let ec_ok_hat = ec_ok ^ (tamper.hits(n + s, 1).count() % 2 == 1);
    let leak = ec.leak + VERIFY_BITS;

    let forced_abort = stream(seed, 103).random_bool(cfg.eps_rob);
    let thr = cfg.pe_threshold;
    let i_pe_a = !forced_abort && ec_ok_hat && qber_a.is_some_and(|q| q <= thr);
    let i_pe_b = !forced_abort && ec_ok && qber_b.is_some_and(|q| q <= thr);

    // privacy amplification
    let pa_len = cfg.pa_output_bits.unwrap_or_else(|| {
        let rate = 1.0 - 2.0 * binary_entropy(thr).expect("threshold in (0, 0.5)");
        ((x_a.len() as f64 * rate).floor() as i64 - leak as i64).max(0) as usize
    });
    let pa_len = pa_len.min(x_a.len());
    let pa_seed: u64 = r_alice.random();
    let key_a = toeplitz_hash(pa_seed, pa_len, &x_a);
    let key_b = toeplitz_hash(pa_seed, pa_len, &ec.corrected);

    let alice = AliceMessages {
        bases: alpha,
        sample_mask,
        sample_bits: sample_a,
        kept_mask,
        ec_seed,
        ec_block: ec_block as u32,
        ec_parities: ec.alice_parities,
        verify_seed,
        verify_hash: vh,
        pa_seed,
        pa_len: pa_len as u32,
    };
    let bob_sent = BobMessages { bases: beta, sample_bits: sample_b, ec_replies: ec.bob_replies.clone(), ec_ok };
    let bob_received =
        BobMessages { bases: beta_hat, sample_bits: sample_b_hat, ec_replies: ec.bob_replies, ec_ok: ec_ok_hat };
    Ok(QkdRun {
        alice,
        bob_sent,
        bob_received,
        qber_a,
        qber_b,
        i_pe_a,
        i_pe_b,
        sifted_bits: sifted_a.iter().filter(|&&x| x).count(),
        leak,
        key_a,
        key_b,
        corrected_a: BitString::from_bools(x_a),
        corrected_b: BitString::from_bools(ec.corrected),
    })
}

pub struct CascadeResult {
    pub corrected: Vec<bool>,
    pub alice_parities: BitString,
    pub bob_replies: BitString,
    /// Parity bits disclosed by Alice.
    pub leak: usize,
}

fn parity(bits: &[bool], positions: &[usize]) -> bool {
    positions.iter().fold(false, |p, &i| p ^ bits[i])
}

/// Cascade: `passes` passes with block size `k1 2^p` over seeded
/// permutations, binary search in every odd-parity block, and back-tracking
/// into earlier passes after each correction.
pub fn cascade(a: &[bool], b: &[bool], k1: usize, passes: usize, seed: u64) -> CascadeResult {
    let n = a.len();
    let mut out = CascadeResult {
        corrected: b.to_vec(),
        alice_parities: BitString::new(),
        bob_replies: BitString::new(),
        leak: 0,
    };
    if n == 0 {
        return out;
    }
    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(passes);
    let mut block_of: Vec<Vec<usize>> = Vec::with_capacity(passes);
    let mut sizes = Vec::with_capacity(passes);
    for p in 0..passes {
        let k = k1.saturating_mul(1 << p.min(40)).min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        if p > 0 {
            perm.shuffle(&mut stream(seed, p as u64));
        }
        let mut owner = vec![0; n];
        for (j, &pos) in perm.iter().enumerate() {
            owner[pos] = j / k;
        }
        perms.push(perm);
        block_of.push(owner);
        sizes.push(k);

        let mut queue = Vec::new();
        for (blk, chunk) in perms[p].chunks(k).enumerate() {
            let pa = parity(a, chunk);
            let mismatch = pa != parity(&out.corrected, chunk);
            out.alice_parities.push(pa);
            out.bob_replies.push(mismatch);
            out.leak += 1;
            if mismatch {
                queue.push((p, blk));
            }
        }
        while let Some((q, blk)) = queue.pop() {
            let k = sizes[q];
            let mut range: &[usize] = &perms[q][blk * k..((blk + 1) * k).min(n)];
            if parity(a, range) == parity(&out.corrected, range) {
                continue;
            }
            while range.len() > 1 {
                let (left, right) = range.split_at(range.len() / 2);
                let pa = parity(a, left);
                let differs = pa != parity(&out.corrected, left);
                out.alice_parities.push(pa);
                out.bob_replies.push(differs);
                out.leak += 1;
                range = if differs { left } else { right };
            }
            let pos = range[0];
            out.corrected[pos] = !out.corrected[pos];
            for r in (0..=p).filter(|&r| r != q) {
                queue.push((r, block_of[r][pos]));
            }
        }
    }
    out
}

/// `len` output bits of the Toeplitz matrix drawn from `seed` applied to `x`.
pub fn toeplitz_hash(seed: u64, len: usize, x: &[bool]) -> BitString {
    let n = x.len();
    if len == 0 || n == 0 {
        return BitString::zeros(len);
    }
    // Row j of the matrix is the window s[j .. j + n) and multiplies x reversed,
    // so T[j][i] = s[j + n - 1 - i] depends only on j - i.
    let words = (len + n - 1).div_ceil(64) + 1;
    let mut rng = stream(seed, 0);
    let s: Vec<u64> = (0..words).map(|_| rng.random()).collect();
    let xr: Vec<u64> = pack(x.iter().rev().copied(), n);
    let nw = xr.len();
    let tail = if n % 64 == 0 { u64::MAX } else { (1u64 << (n % 64)) - 1 };
    let mut out = BitString::zeros(len);
    for j in 0..len {
        let (w0, sh) = (j / 64, j % 64);
        let mut acc = 0u32;
        for w in 0..nw {
            let lo = s[w0 + w] >> sh;
            let hi = if sh == 0 { 0 } else { s.get(w0 + w + 1).copied().unwrap_or(0) << (64 - sh) };
            let mut win = lo | hi;
            if w == nw - 1 {
                win &= tail;
            }
            acc += (win & xr[w]).count_ones();
        }
        out.set(j, acc % 2 == 1);
    }
    out
}

fn pack(bits: impl Iterator<Item = bool>, n: usize) -> Vec<u64> {
    let mut out = vec![0u64; n.div_ceil(64)];
    for (i, b) in bits.enumerate() {
        if b {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}
