use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::basis_function;
use super::stats::Response;
use crate::bits::BitString;
use crate::quantum::{BasisAngle, Qubit};
use crate::spacetime::{AgentId, Event, Handler, Message, Outbox, SignalKind};

/// Who answers the verifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProverStrategy {
    /// Sits at the claimed position, measures in `f(x, y)` and detects with probability `eta`.
    Honest { eta: f64 },
    /// Nobody answers.
    Absent,
    /// Passes the whole run with probability `eps_qpv`, otherwise answers
    /// inconsistently. Stands in for an attack whose success rate is known.
    AbstractPass { eps_qpv: f64 },
    /// Two colluders at `-offset` and `+offset` guess the basis, measure,
    /// swap what they hold and answer only when the guess was right.
    BasisGuess { offset: f64 },
    /// Sits at the claimed position but always measures at `angle` radians.
    FixedBasis { angle: f64 },
    /// A single honest-behaving party displaced to `offset`.
    OffPositionRelay { offset: f64 },
    /// Honest, except that in `round` the two verifiers get different bits.
    SplitResponse { round: usize },
}

impl ProverStrategy {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ProverStrategy::Honest { eta } if !(eta > 0.0 && eta <= 1.0) => Err(format!("honest eta {eta} outside (0, 1]")),
            ProverStrategy::AbstractPass { eps_qpv } if !(0.0..=1.0).contains(&eps_qpv) => {
                Err(format!("eps_qpv {eps_qpv} outside [0, 1]"))
            }
            ProverStrategy::FixedBasis { angle } => BasisAngle::new(angle).map(|_| ()).map_err(|e| e.to_string()),
            ProverStrategy::BasisGuess { offset } | ProverStrategy::OffPositionRelay { offset } if offset == 0.0 => {
                Err("adversary offset must be nonzero".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    V1,
    V2,
}

#[derive(Debug)]
pub(crate) enum QpvMsg {
    Challenge { round: u32, side: Side, bits: BitString },
    Qubit { round: u32, qubit: Qubit },
    Response { round: u32, z: Response },
    Relay { round: u32, bits: BitString, measured: Option<(usize, bool)> },
}

impl Message for QpvMsg {
    fn kind(&self) -> SignalKind {
        match self {
            QpvMsg::Qubit { .. } => SignalKind::Quantum,
            _ => SignalKind::Classical,
        }
    }

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut head = |tag: u8, round: u32| {
            out.push(tag);
            out.extend_from_slice(&round.to_be_bytes());
        };
        match self {
            QpvMsg::Challenge { round, side, bits } => {
                head(if *side == Side::V1 { b'x' } else { b'y' }, *round);
                out.extend_from_slice(&bits.to_bytes());
            }
            QpvMsg::Qubit { round, .. } => head(b'q', *round),
            QpvMsg::Response { round, z } => {
                head(b'r', *round);
                out.push(match z {
                    Some(false) => 0,
                    Some(true) => 1,
                    None => 0xff,
                });
            }
            QpvMsg::Relay { round, bits, measured } => {
                head(b'm', *round);
                if let Some((b, z)) = measured {
                    out.extend_from_slice(&(*b as u32).to_be_bytes());
                    out.push(*z as u8);
                }
                out.extend_from_slice(&bits.to_bytes());
            }
        }
        out
    }
}

/// Collects the first response per round at a verifier.
pub(crate) struct Collector {
    pub responses: Vec<Option<(Response, f64)>>,
}

impl Collector {
    pub fn new(rounds: usize) -> Self {
        Self { responses: vec![None; rounds] }
    }
}

impl Handler<QpvMsg> for Collector {
    fn handle(&mut self, _me: AgentId, event: Event<QpvMsg>, out: &mut Outbox<QpvMsg>) {
        if let Event::Signal { msg: QpvMsg::Response { round, z }, .. } = event {
            let slot = &mut self.responses[round as usize];
            if slot.is_none() {
                *slot = Some((z, out.now()));
            }
        }
    }
}

#[derive(Default)]
struct Partial {
    x: Option<BitString>,
    y: Option<BitString>,
    qubit: Option<Qubit>,
}

/// Waits for `x`, `y` and the qubit of a round, measures and answers both
/// verifiers at once. Covers the honest prover and its single-party
/// variations.
pub(crate) struct Measurer {
    pub v1: AgentId,
    pub v2: AgentId,
    pub function_seed: u64,
    pub num_bases: usize,
    pub eta: f64,
    pub fixed_angle: Option<BasisAngle>,
    pub split_round: Option<usize>,
    pub rng: ChaCha8Rng,
    pending: HashMap<u32, Partial>,
}

impl Measurer {
    pub fn new(v1: AgentId, v2: AgentId, function_seed: u64, num_bases: usize, eta: f64, rng: ChaCha8Rng) -> Self {
        Self { v1, v2, function_seed, num_bases, eta, fixed_angle: None, split_round: None, rng, pending: HashMap::new() }
    }
}

impl Handler<QpvMsg> for Measurer {
    fn handle(&mut self, _me: AgentId, event: Event<QpvMsg>, out: &mut Outbox<QpvMsg>) {
        let Event::Signal { msg, .. } = event else { return };
        let round = match &msg {
            QpvMsg::Challenge { round, .. } | QpvMsg::Qubit { round, .. } => *round,
            _ => return,
        };
        let p = self.pending.entry(round).or_default();
        match msg {
            QpvMsg::Challenge { side: Side::V1, bits, .. } => p.x = Some(bits),
            QpvMsg::Challenge { side: Side::V2, bits, .. } => p.y = Some(bits),
            QpvMsg::Qubit { qubit, .. } => p.qubit = Some(qubit),
            _ => {}
        }
        if !(p.x.is_some() && p.y.is_some() && p.qubit.is_some()) {
            return;
        }
        let p = self.pending.remove(&round).expect("entry present");
        let (x, y, qubit) = (p.x.unwrap(), p.y.unwrap(), p.qubit.unwrap());
        let angle = match self.fixed_angle {
            Some(a) => a,
            None => {
                let theta = basis_function(self.function_seed, &x, &y, self.num_bases).expect("equal challenge lengths");
                BasisAngle::equally_spaced(theta, self.num_bases)
            }
        };
        let split = self.split_round == Some(round as usize);
        let z = if split || self.rng.random_bool(self.eta) { Some(qubit.measure(angle, &mut self.rng)) } else { None };
        let z2 = if split { z.map(|b| !b) } else { z };
        out.send_now(self.v1, QpvMsg::Response { round, z });
        out.send_now(self.v2, QpvMsg::Response { round, z: z2 });
    }
}

#[derive(Default)]
struct GuessState {
    x: Option<BitString>,
    y: Option<BitString>,
    qubit: Option<Qubit>,
    measured: Option<(usize, bool)>,
}

/// One half of the basis-guessing pair. The half facing the first verifier
/// intercepts `x` and the qubit; the other half intercepts `y`.
pub(crate) struct Guesser {
    pub holds_qubit: bool,
    pub partner: AgentId,
    pub verifier: AgentId,
    pub function_seed: u64,
    pub num_bases: usize,
    pub rng: ChaCha8Rng,
    state: HashMap<u32, GuessState>,
}

impl Guesser {
    pub fn new(
        holds_qubit: bool,
        partner: AgentId,
        verifier: AgentId,
        function_seed: u64,
        num_bases: usize,
        rng: ChaCha8Rng,
    ) -> Self {
        Self { holds_qubit, partner, verifier, function_seed, num_bases, rng, state: HashMap::new() }
    }
}

impl Handler<QpvMsg> for Guesser {
    fn handle(&mut self, _me: AgentId, event: Event<QpvMsg>, out: &mut Outbox<QpvMsg>) {
        let Event::Signal { msg, .. } = event else { return };
        let round = match &msg {
            QpvMsg::Challenge { round, .. } | QpvMsg::Qubit { round, .. } | QpvMsg::Relay { round, .. } => *round,
            QpvMsg::Response { .. } => return,
        };
        let st = self.state.entry(round).or_default();
        match msg {
            QpvMsg::Challenge { side: Side::V1, bits, .. } => st.x = Some(bits),
            QpvMsg::Challenge { side: Side::V2, bits, .. } => {
                out.send_now(self.partner, QpvMsg::Relay { round, bits: bits.clone(), measured: None });
                st.y = Some(bits);
            }
            QpvMsg::Qubit { qubit, .. } => st.qubit = Some(qubit),
            QpvMsg::Relay { bits, measured, .. } => {
                if self.holds_qubit {
                    st.y = Some(bits);
                } else {
                    st.x = Some(bits);
                    st.measured = measured;
                }
            }
            QpvMsg::Response { .. } => {}
        }
        if self.holds_qubit && st.measured.is_none() && st.x.is_some() && st.qubit.is_some() {
            let b = self.rng.random_range(0..self.num_bases);
            let z = st.qubit.take().unwrap().measure(BasisAngle::equally_spaced(b, self.num_bases), &mut self.rng);
            st.measured = Some((b, z));
            out.send_now(self.partner, QpvMsg::Relay { round, bits: st.x.clone().unwrap(), measured: Some((b, z)) });
        }
        if let (Some(x), Some(y), Some((b, z))) = (&st.x, &st.y, st.measured) {
            let theta = basis_function(self.function_seed, x, y, self.num_bases).expect("equal challenge lengths");
            let answer = if theta == b { Some(z) } else { None };
            out.send_now(self.verifier, QpvMsg::Response { round, z: answer });
            self.state.remove(&round);
        }
    }
}
