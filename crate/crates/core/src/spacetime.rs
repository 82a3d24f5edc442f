//! Deterministic discrete-event simulation on a line, with signals that
//! travel no faster than light.
//!
//! Units are abstract with `c = 1`. Agents sit at fixed positions; a signal
//! sent at `depart` from `a` to `b` with speed fraction `s` arrives at
//! `depart + |pos(b) - pos(a)| / s`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light.
pub const C: f64 = 1.0;

#[cfg(test)]
const CAUSALITY_TOL: f64 = 1e-12;

pub type AgentId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacetimeError {
    #[error("speed fraction {0} outside (0, 1]")]
    SpeedFraction(f64),
    #[error("agent {agent} scheduled an event at {at} but the clock reads {now}")]
    PastEvent { agent: AgentId, at: f64, now: f64 },
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("prover at {prover} is not strictly between the verifiers at {v1} and {v2}")]
    ProverNotBetween { prover: f64, v1: f64, v2: f64 },
    #[error("topology has no agent with role {0:?}")]
    MissingRole(Role),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Verifier1,
    Verifier2,
    Prover,
    Sender,
    Receiver,
    Adversary,
    Preparer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub position: f64,
    pub role: Role,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    agents: Vec<Agent>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an agent and returns its id (ids are dense, in insertion order).
    pub fn add(&mut self, position: f64, role: Role) -> AgentId {
        let id = self.agents.len();
        self.agents.push(Agent { id, position, role });
        id
    }

    /// V1 at `-d`, prover at 0, V2 at `+d`.
    pub fn standard(d: f64) -> Self {
        let mut t = Self::new();
        t.add(-d, Role::Verifier1);
        t.add(0.0, Role::Prover);
        t.add(d, Role::Verifier2);
        t
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agent(&self, id: AgentId) -> Result<&Agent, SpacetimeError> {
        self.agents.get(id).ok_or(SpacetimeError::UnknownAgent(id))
    }

    pub fn first_with_role(&self, role: Role) -> Result<&Agent, SpacetimeError> {
        self.agents.iter().find(|a| a.role == role).ok_or(SpacetimeError::MissingRole(role))
    }

    pub fn distance(&self, a: AgentId, b: AgentId) -> Result<f64, SpacetimeError> {
        Ok((self.agent(a)?.position - self.agent(b)?.position).abs())
    }

    /// Checks the QPV geometry: one prover, strictly between the two verifiers.
    pub fn validate_qpv(&self) -> Result<(), SpacetimeError> {
        let v1 = self.first_with_role(Role::Verifier1)?.position;
        let v2 = self.first_with_role(Role::Verifier2)?.position;
        let p = self.first_with_role(Role::Prover)?.position;
        let (lo, hi) = if v1 < v2 { (v1, v2) } else { (v2, v1) };
        if !(lo < p && p < hi) {
            return Err(SpacetimeError::ProverNotBetween { prover: p, v1, v2 });
        }
        Ok(())
    }

    pub fn travel_time(&self, a: AgentId, b: AgentId, speed_fraction: f64) -> Result<f64, SpacetimeError> {
        check_speed(speed_fraction)?;
        Ok(self.distance(a, b)? / (C * speed_fraction))
    }

    /// The departure time at which a signal from `a` reaches `b` exactly at `target`.
    pub fn departure_for_arrival(
        &self,
        a: AgentId,
        b: AgentId,
        target: f64,
        speed_fraction: f64,
    ) -> Result<f64, SpacetimeError> {
        Ok(target - self.travel_time(a, b, speed_fraction)?)
    }
}

fn check_speed(speed_fraction: f64) -> Result<(), SpacetimeError> {
    if speed_fraction > 0.0 && speed_fraction <= 1.0 {
        Ok(())
    } else {
        Err(SpacetimeError::SpeedFraction(speed_fraction))
    }
}

/// True iff a response arriving at `response_arrival` is within the window
/// `distance / c + t_delta` after `t_p`.
pub fn timing_check(response_arrival: f64, t_p: f64, distance: f64, t_delta: f64) -> bool {
    response_arrival - t_p <= distance / C + t_delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub origin: AgentId,
    pub destination: AgentId,
    pub depart_time: f64,
    pub arrive_time: f64,
    pub speed_fraction: f64,
    pub kind: SignalKind,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        s.serialize_str(&hex)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        if s.len() % 2 != 0 {
            return Err(serde::de::Error::custom("odd-length hex"));
        }
        (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// A message that can travel between agents. Quantum messages own their
/// qubit, so they cannot be copied; `encode` gives the classical bytes
/// recorded in the trace (a quantum payload records no amplitudes).
pub trait Message {
    fn kind(&self) -> SignalKind;
    fn encode(&self) -> Vec<u8>;
}

impl Message for Vec<u8> {
    fn kind(&self) -> SignalKind {
        SignalKind::Classical
    }

    fn encode(&self) -> Vec<u8> {
        self.clone()
    }
}

#[derive(Debug)]
pub enum Event<M> {
    Timer(u64),
    Signal { from: AgentId, msg: M },
}

struct Scheduled<M> {
    time: f64,
    agent: AgentId,
    seq: u64,
    event: Event<M>,
}

impl<M> Scheduled<M> {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.agent.cmp(&other.agent))
            .then(self.seq.cmp(&other.seq))
    }
}

impl<M> PartialEq for Scheduled<M> {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl<M> Eq for Scheduled<M> {}

impl<M> PartialOrd for Scheduled<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for Scheduled<M> {
    // BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

enum Pending<M> {
    Send { to: AgentId, depart: f64, speed_fraction: f64, msg: M },
    Timer { at: f64, tag: u64 },
}

/// Collects what a handler wants to do in response to one event.
pub struct Outbox<M> {
    now: f64,
    pending: Vec<Pending<M>>,
}

impl<M> Outbox<M> {
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn send(&mut self, to: AgentId, depart: f64, speed_fraction: f64, msg: M) {
        self.pending.push(Pending::Send { to, depart, speed_fraction, msg });
    }

    /// Sends now at light speed.
    pub fn send_now(&mut self, to: AgentId, msg: M) {
        self.send(to, self.now, 1.0, msg);
    }

    pub fn timer(&mut self, at: f64, tag: u64) {
        self.pending.push(Pending::Timer { at, tag });
    }
}

pub trait Handler<M> {
    fn handle(&mut self, me: AgentId, event: Event<M>, out: &mut Outbox<M>);
}

/// Ignores everything it receives.
pub struct Sink;

impl<M> Handler<M> for Sink {
    fn handle(&mut self, _me: AgentId, _event: Event<M>, _out: &mut Outbox<M>) {}
}

pub struct Simulator<M> {
    topology: Topology,
    queue: BinaryHeap<Scheduled<M>>,
    seq: u64,
    now: f64,
    record: bool,
    trace: Vec<SignalRecord>,
}

impl<M: Message> Simulator<M> {
    pub fn new(topology: Topology) -> Self {
        Self { topology, queue: BinaryHeap::new(), seq: 0, now: f64::NEG_INFINITY, record: false, trace: Vec::new() }
    }

    /// Keep a `SignalRecord` for every delivered signal.
    pub fn with_trace(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    fn push(&mut self, time: f64, agent: AgentId, event: Event<M>) {
        self.seq += 1;
        self.queue.push(Scheduled { time, agent, seq: self.seq, event });
    }

    pub fn schedule_timer(&mut self, agent: AgentId, at: f64, tag: u64) -> Result<(), SpacetimeError> {
        self.topology.agent(agent)?;
        if at < self.now {
            return Err(SpacetimeError::PastEvent { agent, at, now: self.now });
        }
        self.push(at, agent, Event::Timer(tag));
        Ok(())
    }

    /// Enqueues a signal and returns its record.
    pub fn send_signal(
        &mut self,
        origin: AgentId,
        destination: AgentId,
        depart: f64,
        speed_fraction: f64,
        msg: M,
    ) -> Result<SignalRecord, SpacetimeError> {
        if depart < self.now {
            return Err(SpacetimeError::PastEvent { agent: origin, at: depart, now: self.now });
        }
        let arrive = depart + self.topology.travel_time(origin, destination, speed_fraction)?;
        let record = SignalRecord {
            origin,
            destination,
            depart_time: depart,
            arrive_time: arrive,
            speed_fraction,
            kind: msg.kind(),
            payload: if self.record { msg.encode() } else { Vec::new() },
        };
        if self.record {
            self.trace.push(record.clone());
        }
        self.push(arrive, destination, Event::Signal { from: origin, msg });
        Ok(record)
    }

    /// Delivers events in `(time, agent, sequence)` order until none remain.
    /// `handlers[i]` serves agent `i`.
    pub fn run_until_quiescent(&mut self, handlers: &mut [&mut dyn Handler<M>]) -> Result<(), SpacetimeError> {
        if handlers.len() != self.topology.len() {
            return Err(SpacetimeError::UnknownAgent(handlers.len().min(self.topology.len())));
        }
        let mut out = Outbox { now: 0.0, pending: Vec::new() };
        while let Some(Scheduled { time, agent, event, .. }) = self.queue.pop() {
            self.now = time;
            out.now = time;
            handlers[agent].handle(agent, event, &mut out);
            let mut pending = std::mem::take(&mut out.pending);
            for p in pending.drain(..) {
                match p {
                    Pending::Send { to, depart, speed_fraction, msg } => {
                        self.send_signal(agent, to, depart, speed_fraction, msg)?;
                    }
                    Pending::Timer { at, tag } => self.schedule_timer(agent, at, tag)?,
                }
            }
            out.pending = pending;
        }
        Ok(())
    }

    pub fn trace(&self) -> &[SignalRecord] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<SignalRecord> {
        std::mem::take(&mut self.trace)
    }
}

/// One JSON object per line.
pub fn write_trace_jsonl<W: Write>(trace: &[SignalRecord], mut w: W) -> std::io::Result<()> {
    for r in trace {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
