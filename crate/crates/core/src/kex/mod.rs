//! Key exchange: QKD with deferred authentication, closed by a hash check
//! and a QPV run. Protocol 1 assumes Alice can authenticate to Bob; Protocol 3
//! authenticates through location alone.

mod qkd;

use rand::Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::auth::{hash_tag, AuthError, HashFamilyParams};
use crate::bits::BitString;
use crate::msgauth::{transfer_key, MsgAdversary, MsgAuthConfig, MsgAuthError, MsgAuthSettings};
use crate::qpv::{run_qpv, ProverStrategy, QpvConfig, QpvError, RunOptions};
use crate::trials::stream;

pub use qkd::{
    cascade, run_toy_qkd, toeplitz_hash, AliceMessages, BobMessages, BobTamper, CascadeResult, QkdConfig, QkdRun,
};

#[derive(Debug, Error)]
pub enum KexError {
    #[error("invalid key-exchange configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error(transparent)]
    MsgAuth(#[from] MsgAuthError),
    #[error(transparent)]
    Qpv(#[from] QpvError),
}

/// The attack run against an exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelAttack {
    None,
    /// Flips bits of Bob's messages to Alice, see [`BobTamper`].
    TamperBobMessages { indices: Vec<usize> },
    /// Flips the first bit of the tag Alice sends. Has no effect where Alice's
    /// channel is authenticated.
    TamperTag,
    /// Makes the closing QPV run fail.
    BlockFinalQpv,
    /// Tampers the tag so Bob aborts, then answers the closing QPV run
    /// from the wrong position. Like `TamperTag`, inert where Alice's channel
    /// is authenticated.
    ImpersonateAtWrongPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ChannelAdversary {
    #[serde(flatten)]
    pub attack: ChannelAttack,
    /// Chance that the adversary passes a QPV run Bob is absent from.
    #[serde(default)]
    pub qpv_forge_prob: f64,
}

impl ChannelAdversary {
    pub fn none() -> Self {
        Self { attack: ChannelAttack::None, qpv_forge_prob: 0.0 }
    }

    pub fn new(attack: ChannelAttack, qpv_forge_prob: f64) -> Self {
        Self { attack, qpv_forge_prob }
    }

    fn tamper(&self) -> BobTamper {
        match &self.attack {
            ChannelAttack::TamperBobMessages { indices } => BobTamper { indices: indices.clone() },
            _ => BobTamper::default(),
        }
    }

    fn tampers_tag(&self) -> bool {
        matches!(self.attack, ChannelAttack::TamperTag | ChannelAttack::ImpersonateAtWrongPosition)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct Indicators {
    pub i_pe_a: bool,
    pub i_pe_b: bool,
    pub i: bool,
    pub i_qpv: bool,
    /// Bob's messages arrived unmodified.
    pub omega_m: bool,
    /// Both parameter estimations passed.
    pub omega_pe: bool,
    /// Both would pass on unmodified messages.
    pub omega_pe_prime: bool,
    pub omega_pe_a_prime: bool,
    pub omega_pe_b_prime: bool,
    /// Bob's hash check passed.
    pub omega_h: bool,
    pub omega_qpv: bool,
    /// The hash key reached Bob intact.
    pub omega_k: bool,
    /// The tag reached Bob intact.
    pub omega_t: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct ExchangeOutcome {
    pub protocol: u8,
    pub key_a: Option<BitString>,
    pub key_b: Option<BitString>,
    pub indicators: Indicators,
    pub transcript_digest: String,
    pub qber_a: Option<f64>,
    pub qber_b: Option<f64>,
    pub sifted_bits: usize,
    pub leak: usize,
    pub message_bits: usize,
}

impl ExchangeOutcome {
    /// Structural guarantees every outcome must satisfy.
    pub fn check_invariants(&self) -> Result<(), String> {
        let ind = &self.indicators;
        if self.key_a.is_some() && !(ind.i_qpv && ind.i_pe_a) {
            return Err("Alice holds a key without I_QPV and I_PE,A".into());
        }
        let bob_gate = if self.protocol == 1 { ind.i_qpv && ind.i_pe_b } else { ind.i && ind.i_pe_b };
        if self.key_b.is_some() && !bob_gate {
            return Err("Bob holds a key without his indicators".into());
        }
        if ind.omega_m && ind.omega_pe != ind.omega_pe_prime {
            return Err("parameter estimation differs from its idealised version on untampered messages".into());
        }
        if self.key_a.is_some() && self.key_b.is_some() && ind.omega_m && self.key_a != self.key_b {
            return Err("keys differ on an untampered transcript".into());
        }
        Ok(())
    }

    pub fn alice_only(&self) -> bool {
        self.key_a.is_some() && self.key_b.is_none()
    }

    pub fn aborted(&self) -> bool {
        self.key_a.is_none() || self.key_b.is_none()
    }
}

fn digest(parts: &[&BitString]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.to_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn final_qpv(
    qpv: &QpvConfig,
    bob_present: bool,
    dropout: f64,
    adversary: &ChannelAdversary,
    t_start: f64,
    seed: u64,
) -> Result<bool, KexError> {
    let mut rng = stream(seed, 0);
    let answers = bob_present && !rng.random_bool(dropout);
    let strategy = if matches!(adversary.attack, ChannelAttack::BlockFinalQpv) {
        ProverStrategy::SplitResponse { round: 0 }
    } else if answers {
        ProverStrategy::Honest { eta: qpv.eta }
    } else if adversary.attack != ChannelAttack::None && adversary.qpv_forge_prob > 0.0 {
        ProverStrategy::AbstractPass { eps_qpv: adversary.qpv_forge_prob }
    } else {
        ProverStrategy::Absent
    };
    let opts = RunOptions { t_start, ..RunOptions::default() };
    Ok(run_qpv(qpv, &strategy, rng.random(), &opts)?.verdict.passed())
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct Protocol1Config {
    pub qkd: QkdConfig,
    pub qpv: QpvConfig,
    pub hash: HashFamilyParams,
    /// Chance that Bob drops out of the closing QPV run.
    pub eps_rob_qpv: f64,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct Protocol3Config {
    pub qkd: QkdConfig,
    pub msg_auth: MsgAuthConfig,
    pub qpv: QpvConfig,
    pub eps_rob_qpv: f64,
}

/// Serialisable form of either protocol's configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ExchangeSettings {
    pub qkd: QkdConfig,
    /// Closing QPV run.
    pub qpv: QpvConfig,
    /// Hash family and key transfer; Protocol 1 uses only the hash part.
    pub msg_auth: MsgAuthSettings,
    pub eps_rob_qpv: f64,
}

impl Default for ExchangeSettings {
    fn default() -> Self {
        Self {
            qkd: QkdConfig { signal_count: 1000, ..QkdConfig::default() },
            qpv: QpvConfig { rounds: 64, ..QpvConfig::default() },
            msg_auth: MsgAuthSettings {
                message_bits: 8192,
                tag_bits: 16,
                qpv: QpvConfig { rounds: 4, ..QpvConfig::default() },
                ..MsgAuthSettings::default()
            },
            eps_rob_qpv: 0.0,
        }
    }
}

impl ExchangeSettings {
    pub fn protocol1(&self) -> Result<Protocol1Config, KexError> {
        self.qkd.validate()?;
        self.qpv.validate()?;
        check_prob("eps_rob_qpv", self.eps_rob_qpv)?;
        let hash = HashFamilyParams::new(self.msg_auth.message_bits, self.msg_auth.tag_bits)?;
        Ok(Protocol1Config { qkd: self.qkd.clone(), qpv: self.qpv.clone(), hash, eps_rob_qpv: self.eps_rob_qpv })
    }

    pub fn protocol3(&self) -> Result<Protocol3Config, KexError> {
        self.qkd.validate()?;
        self.qpv.validate()?;
        check_prob("eps_rob_qpv", self.eps_rob_qpv)?;
        Ok(Protocol3Config {
            qkd: self.qkd.clone(),
            msg_auth: self.msg_auth.build()?,
            qpv: self.qpv.clone(),
            eps_rob_qpv: self.eps_rob_qpv,
        })
    }
}

fn check_prob(name: &str, p: f64) -> Result<(), KexError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(KexError::InvalidConfig(format!("{name} = {p} outside [0, 1]")))
    }
}

fn fits(hash: &HashFamilyParams, m: &BitString) -> Result<(), KexError> {
    if m.len() > hash.message_bits {
        return Err(KexError::InvalidConfig(format!(
            "transcript has {} bits but the hash family takes at most {}; raise message_bits",
            m.len(),
            hash.message_bits
        )));
    }
    Ok(())
}

/// Protocol 1: Alice hashes the Bob messages she received and sends hash key
/// and tag over her authenticated channel; Bob answers the closing QPV run
/// only if the tag matches his own messages.
pub fn run_protocol1(cfg: &Protocol1Config, adversary: &ChannelAdversary, seed: u64) -> Result<ExchangeOutcome, KexError> {
    let qkd_seed = stream(seed, 0).random();
    let run = run_toy_qkd(&cfg.qkd, qkd_seed, &adversary.tamper())?;
    let ideal = run_toy_qkd(&cfg.qkd, qkd_seed, &BobTamper::default())?;
    let mb_hat = run.bob_received.to_bits();
    let mb = run.bob_sent.to_bits();
    fits(&cfg.hash, &mb_hat)?;
    fits(&cfg.hash, &mb)?;

    let key = BitString::random(&mut stream(seed, 1), cfg.hash.key_bits);
    let tag = hash_tag(&cfg.hash, &key, &mb_hat)?;
    let i = hash_tag(&cfg.hash, &key, &mb)? == tag;

    // Alice decides on parameter estimation and announces it authenticated.
    let i_pe = run.i_pe_a;
    let i_qpv = final_qpv(&cfg.qpv, i, cfg.eps_rob_qpv, adversary, 0.0, stream(seed, 2).random())?;
    let ok = i_qpv && i_pe;
    let indicators = Indicators {
        i_pe_a: i_pe,
        i_pe_b: i_pe,
        i,
        i_qpv,
        omega_m: !run.bob_tampered(),
        omega_pe: i_pe,
        omega_pe_prime: ideal.i_pe_a,
        omega_pe_a_prime: ideal.i_pe_a,
        omega_pe_b_prime: ideal.i_pe_a,
        omega_h: i,
        omega_qpv: i_qpv,
        omega_k: true,
        omega_t: true,
    };
    Ok(ExchangeOutcome {
        protocol: 1,
        key_a: ok.then(|| run.key_a.clone()),
        key_b: ok.then(|| run.key_b.clone()),
        indicators,
        transcript_digest: digest(&[&run.alice.to_bits(), &mb_hat, &key, &tag]),
        qber_a: run.qber_a,
        qber_b: run.qber_b,
        sifted_bits: run.sifted_bits,
        leak: run.leak,
        message_bits: mb.len(),
    })
}

/// Protocol 3: Alice tags the whole transcript, sends the hash key through
/// QPV runs, Bob checks the tag and only then answers Alice's closing QPV
/// run.
pub fn run_protocol3(cfg: &Protocol3Config, adversary: &ChannelAdversary, seed: u64) -> Result<ExchangeOutcome, KexError> {
    let hash = &cfg.msg_auth.hash;
    let qkd_seed = stream(seed, 0).random();
    let run = run_toy_qkd(&cfg.qkd, qkd_seed, &adversary.tamper())?;
    let ideal = run_toy_qkd(&cfg.qkd, qkd_seed, &BobTamper::default())?;
    let ma = run.alice.to_bits();
    let m_alice = BitString::concat(&[&ma, &run.bob_received.to_bits()]);
    let m_bob = BitString::concat(&[&ma, &run.bob_sent.to_bits()]);
    fits(hash, &m_alice)?;
    fits(hash, &m_bob)?;

    // tag, or a decoy when Alice's estimation failed
    let key = BitString::random(&mut stream(seed, 1), hash.key_bits);
    let tag = if run.i_pe_a {
        hash_tag(hash, &key, &m_alice)?
    } else {
        BitString::random(&mut stream(seed, 2), hash.tag_bits)
    };
    let mut tag_hat = tag.clone();
    if adversary.tampers_tag() {
        tag_hat.flip(0);
    }

    let transfer = transfer_key(&cfg.msg_auth, &key, run.i_pe_a, &MsgAdversary::None, stream(seed, 3).random())?;
    let i = match &transfer.decoded_key {
        Some(k) => hash_tag(hash, k, &m_bob)? == tag_hat,
        None => false,
    };

    let t_final = cfg.msg_auth.t_start + cfg.msg_auth.runs() as f64 * cfg.msg_auth.delta_t;
    let bob_in = i && run.i_pe_b;
    let i_qpv = final_qpv(&cfg.qpv, bob_in, cfg.eps_rob_qpv, adversary, t_final, stream(seed, 4).random())?;

    let indicators = Indicators {
        i_pe_a: run.i_pe_a,
        i_pe_b: run.i_pe_b,
        i,
        i_qpv,
        omega_m: !run.bob_tampered(),
        omega_pe: run.i_pe_a && run.i_pe_b,
        omega_pe_prime: ideal.i_pe_a && ideal.i_pe_b,
        omega_pe_a_prime: ideal.i_pe_a,
        omega_pe_b_prime: ideal.i_pe_b,
        omega_h: i,
        omega_qpv: i_qpv,
        omega_k: transfer.decoded_key.as_ref() == Some(&key),
        omega_t: tag_hat == tag,
    };
    Ok(ExchangeOutcome {
        protocol: 3,
        key_a: (i_qpv && run.i_pe_a).then(|| run.key_a.clone()),
        key_b: (i && run.i_pe_b).then(|| run.key_b.clone()),
        indicators,
        transcript_digest: digest(&[&m_alice, &tag_hat, &transfer.c_hat]),
        qber_a: run.qber_a,
        qber_b: run.qber_b,
        sifted_bits: run.sifted_bits,
        leak: run.leak,
        message_bits: m_alice.len(),
    })
}
