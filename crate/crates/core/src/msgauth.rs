//! Sending an authenticated message: a tag under a fresh key, then the key
//! itself as a constant-weight codeword where each bit is one QPV run the
//! sender either takes part in (1) or skips (0).

use rand::Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auth::{hash_tag, AuthError, CodecParams, Codeword, HashFamilyParams};
use crate::bits::BitString;
use crate::qpv::{run_qpv, ProverStrategy, QpvConfig, QpvError, RunOptions};
use crate::trials::stream;

#[derive(Debug, Error)]
pub enum MsgAuthError {
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error(transparent)]
    Qpv(#[from] QpvError),
    #[error("invalid message-authentication configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct MsgAuthConfig {
    pub hash: HashFamilyParams,
    pub codec: CodecParams,
    pub qpv: QpvConfig,
    pub delta_t: f64,
    pub t_start: f64,
    /// Probability that an honest sender drops out of a run it should answer.
    pub eps_rob: f64,
    /// Detection efficiency of the honest sender.
    pub sender_eta: f64,
}

/// The serialisable knobs from which a [`MsgAuthConfig`] is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct MsgAuthSettings {
    pub message_bits: usize,
    pub tag_bits: usize,
    pub qpv: QpvConfig,
    pub delta_t: Option<f64>,
    pub t_start: f64,
    pub eps_rob: f64,
    pub sender_eta: Option<f64>,
}

impl Default for MsgAuthSettings {
    fn default() -> Self {
        Self {
            message_bits: 64,
            tag_bits: 8,
            qpv: QpvConfig { rounds: 64, ..QpvConfig::default() },
            delta_t: None,
            t_start: 0.0,
            eps_rob: 0.0,
            sender_eta: None,
        }
    }
}

impl MsgAuthSettings {
    pub fn build(&self) -> Result<MsgAuthConfig, MsgAuthError> {
        let hash = HashFamilyParams::new(self.message_bits, self.tag_bits)?;
        MsgAuthConfig::new(hash, self.qpv.clone(), self.delta_t, self.t_start, self.eps_rob, self.sender_eta)
    }
}

impl MsgAuthConfig {
    pub fn new(
        hash: HashFamilyParams,
        qpv: QpvConfig,
        delta_t: Option<f64>,
        t_start: f64,
        eps_rob: f64,
        sender_eta: Option<f64>,
    ) -> Result<Self, MsgAuthError> {
        qpv.validate()?;
        let codec = CodecParams::new(hash.key_bits)?;
        let delta_t = delta_t.unwrap_or_else(|| qpv.effective_delta_t());
        if delta_t <= qpv.run_duration() {
            return Err(MsgAuthError::InvalidConfig(format!(
                "delta_t = {delta_t} must exceed the QPV run duration {}",
                qpv.run_duration()
            )));
        }
        if !(0.0..=1.0).contains(&eps_rob) {
            return Err(MsgAuthError::InvalidConfig(format!("eps_rob = {eps_rob} outside [0, 1]")));
        }
        let sender_eta = sender_eta.unwrap_or(qpv.eta);
        if !(sender_eta > 0.0 && sender_eta <= 1.0) {
            return Err(MsgAuthError::InvalidConfig(format!("sender_eta = {sender_eta} outside (0, 1]")));
        }
        Ok(Self { hash, codec, qpv, delta_t, t_start, eps_rob, sender_eta })
    }

    pub fn runs(&self) -> usize {
        self.codec.code_length
    }
}

/// What sits between sender and receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MsgAdversary {
    None,
    /// Jams the listed runs (0-based codeword positions) so they fail.
    FlipOneToZero { indices: Vec<usize> },
    /// Tries to pass the listed runs where the sender is silent, succeeding
    /// with `pass_prob` each. With `compensate`, also jams one interior
    /// 1-run per success so the weight stays at `l_C + 2`.
    FlipZeroToOne {
        indices: Option<Vec<usize>>,
        pass_prob: f64,
        #[serde(default)]
        compensate: bool,
    },
    /// Gives the receiver a start time `shift` runs after the sender's: the
    /// receiver's run `i` meets the sender's run `i - shift`. Runs with no
    /// sender are forged with `forge_prob`.
    Desync { shift: i64, forge_prob: f64 },
    /// Replaces the message and tag. Without `learn_key_first` they arrive
    /// before the key transfer and `tag` (random if absent) is a blind guess.
    /// With it, the adversary intercepts the sender's runs to learn `K`,
    /// tags `message` correctly, and must then forge the 1-runs towards the
    /// receiver from the wrong place with `forge_prob` each.
    DelayMsgTag {
        message: BitString,
        tag: Option<BitString>,
        #[serde(default)]
        learn_key_first: bool,
        #[serde(default)]
        forge_prob: f64,
    },
}

impl MsgAdversary {
    pub fn validate(&self) -> Result<(), String> {
        let p = match self {
            MsgAdversary::FlipZeroToOne { pass_prob, .. } => *pass_prob,
            MsgAdversary::Desync { forge_prob, .. } | MsgAdversary::DelayMsgTag { forge_prob, .. } => *forge_prob,
            _ => 0.0,
        };
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(format!("adversary probability {p} outside [0, 1]"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Actor {
    Sender,
    Silent,
    Forger(f64),
    Jammer,
}

#[derive(Debug, Clone, PartialEq, Serialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct MsgAuthOutcome {
    pub key: BitString,
    pub codeword: Codeword,
    pub c_hat: BitString,
    pub tamper_check_pass: bool,
    pub decoded_key: Option<BitString>,
    pub received_message: BitString,
    pub received_tag: BitString,
    pub auth_pass: bool,
    /// The tampering check passed.
    pub omega_tc: bool,
    /// Message and tag reached the receiver before the key transfer.
    pub omega_mt: bool,
}

impl MsgAuthOutcome {
    pub fn key_mismatch_accepted(&self) -> bool {
        self.tamper_check_pass && self.decoded_key.as_ref() != Some(&self.key)
    }

    pub fn forged(&self, message: &BitString) -> bool {
        self.auth_pass && &self.received_message != message
    }
}

/// Runs the protocol with a key drawn from `seed`.
pub fn send_authenticated(
    cfg: &MsgAuthConfig,
    message: &BitString,
    adversary: &MsgAdversary,
    seed: u64,
) -> Result<MsgAuthOutcome, MsgAuthError> {
    let key = BitString::random(&mut stream(seed, 0), cfg.hash.key_bits);
    send_authenticated_with_key(cfg, message, &key, adversary, seed)
}

/// Runs the protocol with a given key.
pub fn send_authenticated_with_key(
    cfg: &MsgAuthConfig,
    message: &BitString,
    key: &BitString,
    adversary: &MsgAdversary,
    seed: u64,
) -> Result<MsgAuthOutcome, MsgAuthError> {
    let tag = hash_tag(&cfg.hash, key, message)?;
    let (mut received_message, mut received_tag, mut omega_mt) = (message.clone(), tag, true);
    if let MsgAdversary::DelayMsgTag { message: m, tag: t, learn_key_first, .. } = adversary {
        if m.len() > cfg.hash.message_bits {
            return Err(AuthError::MessageTooLong { max: cfg.hash.message_bits, got: m.len() }.into());
        }
        received_message = m.clone();
        if *learn_key_first {
            omega_mt = false;
            received_tag = hash_tag(&cfg.hash, key, m)?;
        } else {
            received_tag = match t {
                Some(t) => t.clone(),
                None => BitString::random(&mut stream(seed, 2), cfg.hash.tag_bits),
            };
        }
    }
    let transfer = transfer_key(cfg, key, true, adversary, seed)?;
    let auth_pass = match &transfer.decoded_key {
        Some(k) => hash_tag(&cfg.hash, k, &received_message)? == received_tag,
        None => false,
    };
    Ok(MsgAuthOutcome {
        key: key.clone(),
        codeword: transfer.codeword,
        c_hat: transfer.c_hat,
        tamper_check_pass: transfer.tamper_check_pass,
        decoded_key: transfer.decoded_key,
        received_message,
        received_tag,
        auth_pass,
        omega_tc: transfer.tamper_check_pass,
        omega_mt,
    })
}

/// The receiver's side of the key transfer.
#[derive(Debug, Clone, PartialEq, Serialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub struct KeyTransfer {
    pub codeword: Codeword,
    pub c_hat: BitString,
    pub tamper_check_pass: bool,
    pub decoded_key: Option<BitString>,
}

/// Sends `key` as `2 l_C + 2` QPV runs. A sender that is not `present` stays
/// silent throughout.
pub fn transfer_key(
    cfg: &MsgAuthConfig,
    key: &BitString,
    present: bool,
    adversary: &MsgAdversary,
    seed: u64,
) -> Result<KeyTransfer, MsgAuthError> {
    adversary.validate().map_err(MsgAuthError::InvalidConfig)?;
    let codeword = cfg.codec.encode(key)?;
    let len = cfg.runs();
    let mut rng = stream(seed, 1);

    // the sender's intended behaviour per run, honest dropouts included
    let sender: Vec<Actor> = codeword
        .iter()
        .map(|c| if present && c && !rng.random_bool(cfg.eps_rob) { Actor::Sender } else { Actor::Silent })
        .collect();

    let mut actors = sender.clone();
    let mut compensate = false;
    match adversary {
        MsgAdversary::None => {}
        MsgAdversary::FlipOneToZero { indices } => {
            for &i in indices.iter().filter(|&&i| i < len) {
                if codeword.get(i) == Some(true) {
                    actors[i] = Actor::Jammer;
                }
            }
        }
        MsgAdversary::FlipZeroToOne { indices, pass_prob, compensate: c } => {
            let all: Vec<usize> = (0..len).collect();
            for &i in indices.as_ref().unwrap_or(&all).iter().filter(|&&i| i < len) {
                if codeword.get(i) == Some(false) {
                    actors[i] = Actor::Forger(*pass_prob);
                }
            }
            compensate = *c;
        }
        MsgAdversary::Desync { shift, forge_prob } => {
            for (i, a) in actors.iter_mut().enumerate() {
                let j = i as i64 - shift;
                *a = if (0..len as i64).contains(&j) { sender[j as usize] } else { Actor::Forger(*forge_prob) };
            }
        }
        MsgAdversary::DelayMsgTag { learn_key_first, forge_prob, .. } => {
            if *learn_key_first {
                for (i, a) in actors.iter_mut().enumerate() {
                    *a = if codeword.get(i) == Some(true) { Actor::Forger(*forge_prob) } else { Actor::Silent };
                }
            }
        }
    }

    let mut c_hat = BitString::zeros(len);
    let run = |i: usize, actor: Actor| -> Result<bool, MsgAuthError> {
        let strategy = match actor {
            Actor::Sender => ProverStrategy::Honest { eta: cfg.sender_eta },
            Actor::Silent => return Ok(false),
            Actor::Forger(p) => ProverStrategy::AbstractPass { eps_qpv: p },
            Actor::Jammer => ProverStrategy::SplitResponse { round: 0 },
        };
        let opts = RunOptions { t_start: cfg.t_start + i as f64 * cfg.delta_t, ..RunOptions::default() };
        let run_seed = stream(seed, 16 + i as u64).random();
        Ok(run_qpv(&cfg.qpv, &strategy, run_seed, &opts)?.verdict.passed())
    };
    let mut forged = 0;
    for i in 0..len {
        if let Actor::Forger(_) = actors[i] {
            let pass = run(i, actors[i])?;
            forged += pass as usize;
            c_hat.set(i, pass);
        }
    }
    if compensate {
        // jam the first interior 1-runs, one per forged success
        for i in (1..len - 1).filter(|&i| codeword.get(i) == Some(true)).take(forged) {
            actors[i] = Actor::Jammer;
        }
    }
    for i in 0..len {
        if !matches!(actors[i], Actor::Forger(_)) {
            c_hat.set(i, run(i, actors[i])?);
        }
    }

    let decoded_key = if cfg.codec.tamper_check(&c_hat) { cfg.codec.decode(&c_hat).ok() } else { None };
    Ok(KeyTransfer { codeword, c_hat, tamper_check_pass: decoded_key.is_some(), decoded_key })
}

/// `delta + 2 ceil(l_K / 2) eps_QPV`, clamped to [0, 1].
pub fn soundness_bound_msg_auth(l_k: usize, eps_qpv: f64, delta: f64) -> f64 {
    (delta + 2.0 * l_k.div_ceil(2) as f64 * eps_qpv).clamp(0.0, 1.0)
}

/// `(ceil(l_K / 2) + 2) eps_rob`, clamped to [0, 1].
pub fn robustness_bound_msg_auth(l_k: usize, eps_rob: f64) -> f64 {
    ((l_k.div_ceil(2) + 2) as f64 * eps_rob).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(l_t: usize, n: usize, eps_rob: f64) -> MsgAuthConfig {
        let qpv = QpvConfig { rounds: 4, ..QpvConfig::default() };
        MsgAuthConfig::new(HashFamilyParams::new(n, l_t).unwrap(), qpv, None, 0.0, eps_rob, None).unwrap()
    }

    fn msg() -> BitString {
        BitString::from_binary("101100").unwrap()
    }

    #[test]
    fn honest_noiseless_run_authenticates() {
        let c = cfg(3, 6, 0.0);
        for seed in 0..20 {
            let out = send_authenticated(&c, &msg(), &MsgAdversary::None, seed).unwrap();
            assert!(out.tamper_check_pass && out.auth_pass && out.omega_mt);
            assert_eq!(out.decoded_key.as_ref(), Some(&out.key));
            assert_eq!(out.c_hat, out.codeword);
        }
    }

    #[test]
    fn one_to_zero_flip_breaks_the_weight() {
        let c = cfg(3, 6, 0.0);
        for seed in 0..20 {
            let key = BitString::random(&mut stream(seed, 0), c.hash.key_bits);
            let cw = c.codec.encode(&key).unwrap();
            let i = (1..cw.len() - 1).find(|&i| cw.get(i) == Some(true)).unwrap();
            let adv = MsgAdversary::FlipOneToZero { indices: vec![i] };
            let out = send_authenticated_with_key(&c, &msg(), &key, &adv, seed).unwrap();
            assert_eq!(out.c_hat.hamming_weight(), c.codec.half_length + 1);
            assert!(!out.tamper_check_pass && out.decoded_key.is_none() && !out.auth_pass);
        }
    }

    #[test]
    fn one_to_zero_flips_never_pass_exhaustive() {
        let codec = CodecParams::new(2).unwrap();
        for k in 0..4 {
            let key = BitString::from_u64(k, 2).unwrap();
            let cw = codec.encode(&key).unwrap();
            for mask in 1u32..(1 << cw.len()) {
                let mut c_hat = cw.clone();
                (0..cw.len()).filter(|i| mask >> i & 1 == 1).for_each(|i| c_hat.set(i, false));
                if codec.tamper_check(&c_hat) {
                    assert_eq!(codec.decode(&c_hat).unwrap(), key);
                }
            }
        }
        // the same through full runs, l_T = n = 1 so l_K = 4
        let qpv = QpvConfig { rounds: 2, ..QpvConfig::default() };
        let c = MsgAuthConfig::new(HashFamilyParams::new(1, 1).unwrap(), qpv, None, 0.0, 0.0, None).unwrap();
        let m = BitString::from_binary("1").unwrap();
        for k in 0..16 {
            let key = BitString::from_u64(k, 4).unwrap();
            for mask in 1u32..(1 << c.runs()) {
                let indices: Vec<usize> = (0..c.runs()).filter(|i| mask >> i & 1 == 1).collect();
                let adv = MsgAdversary::FlipOneToZero { indices };
                let out = send_authenticated_with_key(&c, &m, &key, &adv, 3).unwrap();
                assert!(!out.key_mismatch_accepted());
            }
        }
    }

    #[test]
    fn zero_to_one_needs_a_compensating_flip() {
        let c = cfg(3, 6, 0.0);
        let all = MsgAdversary::FlipZeroToOne { indices: None, pass_prob: 1.0, compensate: false };
        let out = send_authenticated(&c, &msg(), &all, 1).unwrap();
        assert!(out.c_hat.iter().all(|b| b) && !out.tamper_check_pass);

        let swap = MsgAdversary::FlipZeroToOne { indices: None, pass_prob: 1.0, compensate: true };
        for seed in 0..20 {
            let out = send_authenticated(&c, &msg(), &swap, seed).unwrap();
            assert_eq!(out.c_hat.hamming_weight(), c.codec.half_length + 2);
            assert_ne!(out.c_hat, out.codeword);
            // the swapped word may rank outside the key space
            assert_eq!(out.tamper_check_pass, c.codec.decode(&out.c_hat).is_ok());
            assert!(!out.tamper_check_pass || out.key_mismatch_accepted());
        }
    }

    #[test]
    fn desync_leaves_an_endpoint_to_forge() {
        let c = cfg(3, 6, 0.0);
        for shift in [-1i64, 1, 2] {
            let adv = MsgAdversary::Desync { shift, forge_prob: 0.0 };
            for seed in 0..10 {
                let out = send_authenticated(&c, &msg(), &adv, seed).unwrap();
                assert!(!out.tamper_check_pass, "shift {shift}");
            }
        }
        let adv = MsgAdversary::Desync { shift: 0, forge_prob: 0.0 };
        assert!(send_authenticated(&c, &msg(), &adv, 0).unwrap().auth_pass);
    }

    #[test]
    fn key_learning_delay_needs_forged_runs() {
        let c = cfg(3, 6, 0.0);
        let m2 = BitString::from_binary("000111").unwrap();
        let fail = MsgAdversary::DelayMsgTag { message: m2.clone(), tag: None, learn_key_first: true, forge_prob: 0.0 };
        let win = MsgAdversary::DelayMsgTag { message: m2.clone(), tag: None, learn_key_first: true, forge_prob: 1.0 };
        for seed in 0..10 {
            let out = send_authenticated(&c, &msg(), &fail, seed).unwrap();
            assert!(!out.omega_mt && !out.auth_pass);
            let out = send_authenticated(&c, &msg(), &win, seed).unwrap();
            assert!(out.forged(&msg()));
        }
    }

    #[test]
    fn config_checks() {
        let qpv = QpvConfig { rounds: 4, ..QpvConfig::default() };
        let h = HashFamilyParams::new(6, 3).unwrap();
        assert!(MsgAuthConfig::new(h, qpv.clone(), Some(1.0), 0.0, 0.0, None).is_err());
        assert!(MsgAuthConfig::new(h, qpv.clone(), None, 0.0, 1.5, None).is_err());
        let s: Result<MsgAuthSettings, _> = serde_json::from_str(r#"{"tag_bits": 3, "bogus": 1}"#);
        assert!(s.is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(soundness_bound_msg_auth(10, 0.0, 0.0), 0.0);
        assert_eq!(soundness_bound_msg_auth(10, 1e-3, 2f64.powi(-31)), 2f64.powi(-31) + 10.0 * 1e-3);
        assert_eq!(soundness_bound_msg_auth(9, 1e-3, 0.0), 10.0 * 1e-3);
        assert_eq!(robustness_bound_msg_auth(7, 0.0), 0.0);
        assert_eq!(robustness_bound_msg_auth(10, 1e-2), 7.0 * 1e-2);
        assert_eq!(robustness_bound_msg_auth(4, 0.5), 1.0);
    }
}
