use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{Deviations, QpvRoundRecord, QpvStats, QpvSummary, RoundVerdict, Verdict};
use super::strategy::{Collector, Guesser, Measurer, ProverStrategy, QpvMsg, Side};
use super::{basis_function, QpvConfig, QpvError};
use crate::bits::BitString;
use crate::trials::stream;
use crate::quantum::{bb84_state, BasisAngle, Bb84State, Qubit};
use crate::spacetime::{timing_check, Handler, Role, SignalRecord, Simulator, Sink, Topology};

const V1: usize = 0;
const P: usize = 1;
const V2: usize = 2;

/// Float slack on the response deadline; arrival times are sums of several
/// legs and can overshoot an exact light-speed deadline by a few ulps.
const TIMING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Earliest time any signal of the run departs.
    pub t_start: f64,
    pub keep_records: bool,
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { t_start: 0.0, keep_records: true, record_trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpvRun {
    pub stats: QpvStats,
    pub records: Vec<QpvRoundRecord>,
    pub verdict: Verdict,
    pub trace: Vec<SignalRecord>,
}

impl QpvRun {
    pub fn summary(&self) -> QpvSummary {
        QpvSummary {
            rounds: self.stats.rounds_run,
            detections: self.stats.detections,
            errors: self.stats.errors,
            transmission: self.stats.transmission(),
            conditional_error: self.stats.conditional_error_rate().ok(),
            deviations: None,
            verdict: self.verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiBasisRun {
    pub stats: QpvStats,
    pub records: Vec<QpvRoundRecord>,
    pub deviations: Deviations,
    pub verdict: Verdict,
    pub trace: Vec<SignalRecord>,
}

impl MultiBasisRun {
    pub fn delta_t(&self) -> f64 {
        self.deviations.total
    }

    pub fn summary(&self) -> QpvSummary {
        QpvSummary {
            rounds: self.stats.rounds_run,
            detections: self.stats.detections,
            errors: self.stats.errors,
            transmission: self.stats.transmission(),
            conditional_error: self.stats.conditional_error_rate().ok(),
            deviations: Some(self.deviations.clone()),
            verdict: self.verdict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// The first verifier prepares the state in basis `f(x, y)`.
    Single,
    /// A third party prepares a uniformly random BB84 state.
    Multi,
}

struct Raw {
    stats: QpvStats,
    records: Vec<QpvRoundRecord>,
    trace: Vec<SignalRecord>,
}

fn simulate(
    cfg: &QpvConfig,
    strategy: &ProverStrategy,
    seed: u64,
    mode: Mode,
    opts: &RunOptions,
) -> Result<Raw, QpvError> {
    cfg.validate()?;
    strategy.validate().map_err(QpvError::InvalidConfig)?;
    let n = cfg.num_bases;
    let d = cfg.distance;

    let mut topo = Topology::new();
    topo.add(-d, Role::Verifier1);
    topo.add(0.0, Role::Prover);
    topo.add(d, Role::Verifier2);
    let preparer = match mode {
        Mode::Single => V1,
        Mode::Multi => topo.add(cfg.preparer_position.unwrap_or(-d), Role::Preparer),
    };

    let measurer = |eta: f64, k: u64| Measurer::new(V1, V2, cfg.function_seed, n, eta, stream(seed, k));
    let mut prover: Box<dyn Handler<QpvMsg>> = Box::new(Sink);
    let mut extras: Vec<Box<dyn Handler<QpvMsg>>> = Vec::new();
    if mode == Mode::Multi {
        extras.push(Box::new(Sink));
    }
    let (mut route_x, mut route_y) = (P, P);
    match *strategy {
        ProverStrategy::Honest { eta } => prover = Box::new(measurer(eta, 1)),
        ProverStrategy::Absent => {}
        ProverStrategy::AbstractPass { eps_qpv } => {
            let mut m = measurer(1.0, 1);
            if !stream(seed, 5).random_bool(eps_qpv) {
                m.split_round = Some(0);
            }
            prover = Box::new(m);
        }
        ProverStrategy::FixedBasis { angle } => {
            let mut m = measurer(1.0, 1);
            m.fixed_angle = Some(BasisAngle::new(angle).expect("validated"));
            prover = Box::new(m);
        }
        ProverStrategy::SplitResponse { round } => {
            let mut m = measurer(1.0, 1);
            m.split_round = Some(round);
            prover = Box::new(m);
        }
        ProverStrategy::OffPositionRelay { offset } => {
            let a = topo.add(offset, Role::Adversary);
            extras.push(Box::new(measurer(1.0, 2)));
            route_x = a;
            route_y = a;
        }
        ProverStrategy::BasisGuess { offset } => {
            let a1 = topo.add(-offset.abs(), Role::Adversary);
            let a2 = topo.add(offset.abs(), Role::Adversary);
            extras.push(Box::new(Guesser::new(true, a2, V1, cfg.function_seed, n, stream(seed, 2))));
            extras.push(Box::new(Guesser::new(false, a1, V2, cfg.function_seed, n, stream(seed, 3))));
            route_x = a1;
            route_y = a2;
        }
    }

    let mut sim = Simulator::new(topo);
    if opts.record_trace {
        sim = sim.with_trace();
    }
    let mut vrng = stream(seed, 0);
    let prep_travel = sim.topology().travel_time(preparer, P, cfg.speed_fraction)?;
    let lead = cfg.qubit_lead + prep_travel;
    let first_t0 = opts.t_start + lead.max(d);
    let first_q = opts.t_start + (lead.max(d) - lead);
    let mut plan = Vec::with_capacity(cfg.rounds);
    for r in 0..cfg.rounds {
        let t0 = first_t0 + r as f64 * cfg.round_spacing;
        let x = BitString::random(&mut vrng, cfg.n_bits);
        let y = BitString::random(&mut vrng, cfg.n_bits);
        let theta = basis_function(cfg.function_seed, &x, &y, n)?;
        let state = match mode {
            Mode::Single => Bb84State::new(theta == 1, vrng.random::<bool>()),
            Mode::Multi => Bb84State::from_index(vrng.random_range(0..4)),
        };
        let round = r as u32;
        let q_depart = first_q + r as f64 * cfg.round_spacing;
        let qubit = Qubit::prepare(bb84_state(state.basis(), state.value()));
        sim.send_signal(preparer, route_x, q_depart, cfg.speed_fraction, QpvMsg::Qubit { round, qubit })?;
        let xd = t0 - sim.topology().travel_time(V1, P, 1.0)?;
        let yd = t0 - sim.topology().travel_time(V2, P, 1.0)?;
        sim.send_signal(V1, route_x, xd, 1.0, QpvMsg::Challenge { round, side: Side::V1, bits: x.clone() })?;
        sim.send_signal(V2, route_y, yd, 1.0, QpvMsg::Challenge { round, side: Side::V2, bits: y.clone() })?;
        plan.push((t0, x, y, theta, state));
    }

    let mut c1 = Collector::new(cfg.rounds);
    let mut c2 = Collector::new(cfg.rounds);
    {
        let mut handlers: Vec<&mut dyn Handler<QpvMsg>> = vec![&mut c1, prover.as_mut(), &mut c2];
        handlers.extend(extras.iter_mut().map(|h| h.as_mut() as &mut dyn Handler<QpvMsg>));
        sim.run_until_quiescent(&mut handlers)?;
    }

    let mut stats = QpvStats::new(n);
    let mut records = Vec::with_capacity(if opts.keep_records { cfg.rounds } else { 0 });
    for (r, (t0, x, y, theta, state)) in plan.into_iter().enumerate() {
        let (r1, a1) = split(c1.responses[r]);
        let (r2, a2) = split(c2.responses[r]);
        let late = |a: Option<f64>| a.is_some_and(|t| !timing_check(t, t0, d, cfg.t_delta + TIMING_SLACK));
        let eigenbasis = 2 * theta == if state.basis() { n } else { 0 };
        let verdict = if r1 != r2 {
            RoundVerdict::MismatchFail
        } else if late(a1) || late(a2) {
            RoundVerdict::TimingFail
        } else if r1.is_none() {
            RoundVerdict::Loss
        } else if eigenbasis && r1 != Some(state.value()) {
            RoundVerdict::Error
        } else {
            RoundVerdict::Ok
        };
        let rec = QpvRoundRecord {
            round: r,
            x,
            y,
            theta,
            prepared_state: state.index(),
            z_sent: state.value(),
            response1: r1,
            response2: r2,
            arrival1: a1,
            arrival2: a2,
            verdict,
        };
        stats.record(&rec);
        if opts.keep_records {
            records.push(rec);
        }
    }
    Ok(Raw { stats, records, trace: sim.take_trace() })
}

fn split(slot: Option<(Option<bool>, f64)>) -> (Option<bool>, Option<f64>) {
    match slot {
        Some((z, t)) => (z, Some(t)),
        None => (None, None),
    }
}

/// The two-basis protocol with explicit run options.
pub fn run_qpv(cfg: &QpvConfig, strategy: &ProverStrategy, seed: u64, opts: &RunOptions) -> Result<QpvRun, QpvError> {
    if cfg.num_bases != 2 {
        return Err(QpvError::InvalidConfig(format!("single-basis mode needs num_bases = 2, got {}", cfg.num_bases)));
    }
    let raw = simulate(cfg, strategy, seed, Mode::Single, opts)?;
    let s = &raw.stats;
    let clean = s.timing_failures == 0 && s.mismatch_failures == 0;
    let pass = clean && s.conditional_error_rate().is_ok_and(|e| e <= cfg.error_threshold);
    Ok(QpvRun {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        stats: raw.stats,
        records: raw.records,
        trace: raw.trace,
    })
}

/// The two-basis protocol: the run fails on any timing or mismatch failure,
/// when nothing was detected, or when the conditional error rate exceeds the
/// threshold.
pub fn run_qpv_single(cfg: &QpvConfig, strategy: &ProverStrategy, seed: u64) -> Result<QpvRun, QpvError> {
    run_qpv(cfg, strategy, seed, &RunOptions::default())
}

/// The multi-basis protocol: BB84 states from a third party, measurement in
/// one of `num_bases` X-Z plane bases, verdict on the total deviation.
pub fn run_qpv_multi_basis(
    cfg: &QpvConfig,
    strategy: &ProverStrategy,
    seed: u64,
    opts: &RunOptions,
) -> Result<MultiBasisRun, QpvError> {
    let raw = simulate(cfg, strategy, seed, Mode::Multi, opts)?;
    let deviations = raw.stats.deviations(cfg.eta, cfg.deviation_weights.as_deref());
    let s = &raw.stats;
    let pass = s.timing_failures == 0 && s.mismatch_failures == 0 && deviations.total <= cfg.deviation_threshold;
    Ok(MultiBasisRun {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        stats: raw.stats,
        records: raw.records,
        deviations,
        trace: raw.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(rounds: usize) -> QpvConfig {
        QpvConfig { rounds, ..QpvConfig::default() }
    }

    #[test]
    fn honest_noiseless_passes() {
        let run = run_qpv_single(&cfg(10_000), &ProverStrategy::Honest { eta: 1.0 }, 1).unwrap();
        assert_eq!(run.verdict, Verdict::Pass);
        assert_eq!(run.stats.errors, 0);
        assert_eq!(run.stats.detections, 10_000);
    }

    #[test]
    fn absent_prover_fails() {
        let run = run_qpv_single(&cfg(100), &ProverStrategy::Absent, 1).unwrap();
        assert_eq!(run.verdict, Verdict::Fail);
        assert_eq!(run.stats.detections, 0);
        assert!(run.records.iter().all(|r| r.verdict == RoundVerdict::Loss));
    }

    #[test]
    fn split_response_fails_regardless_of_other_rounds() {
        let run = run_qpv_single(&cfg(200), &ProverStrategy::SplitResponse { round: 150 }, 2).unwrap();
        assert_eq!(run.verdict, Verdict::Fail);
        assert_eq!(run.stats.mismatch_failures, 1);
        assert_eq!(run.records[150].verdict, RoundVerdict::MismatchFail);
    }

    #[test]
    fn off_position_relay_is_always_late() {
        let c = QpvConfig { t_delta: 0.1, ..cfg(500) };
        let run = run_qpv_single(&c, &ProverStrategy::OffPositionRelay { offset: 0.25 }, 3).unwrap();
        assert_eq!(run.verdict, Verdict::Fail);
        assert_eq!(run.stats.timing_failures, 500);
        let r = &run.records[0];
        let t0 = r.arrival2.unwrap() - 1.0;
        assert!((r.arrival1.unwrap() - t0 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn basis_guess_meets_the_deadline_exactly() {
        let run = run_qpv_single(&cfg(2000), &ProverStrategy::BasisGuess { offset: 0.5 }, 4).unwrap();
        assert_eq!(run.stats.timing_failures, 0);
        assert_eq!(run.stats.mismatch_failures, 0);
        assert_eq!(run.stats.errors, 0);
        let f = run.stats.transmission();
        assert!((f - 0.5).abs() < 4.0 * (0.25f64 / 2000.0).sqrt(), "{f}");
    }

    #[test]
    fn fixed_breidbart_basis_error() {
        let run = run_qpv_single(&cfg(20_000), &ProverStrategy::FixedBasis { angle: PI / 4.0 }, 5).unwrap();
        let e = run.stats.conditional_error_rate().unwrap();
        assert!((e - (PI / 8.0).sin().powi(2)).abs() < 0.01, "{e}");
        assert_eq!(run.verdict, Verdict::Fail);
    }

    #[test]
    fn abstract_pass_is_a_run_level_coin() {
        let passes = (0..400)
            .filter(|&s| run_qpv_single(&cfg(4), &ProverStrategy::AbstractPass { eps_qpv: 0.25 }, s).unwrap().verdict.passed())
            .count();
        assert!((passes as f64 / 400.0 - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / 400.0).sqrt());
        assert!(!run_qpv_single(&cfg(4), &ProverStrategy::AbstractPass { eps_qpv: 0.0 }, 0).unwrap().verdict.passed());
        assert!(run_qpv_single(&cfg(4), &ProverStrategy::AbstractPass { eps_qpv: 1.0 }, 0).unwrap().verdict.passed());
    }

    #[test]
    fn same_seed_same_trace() {
        let opts = RunOptions { record_trace: true, ..RunOptions::default() };
        let a = run_qpv(&cfg(50), &ProverStrategy::BasisGuess { offset: 0.3 }, 9, &opts).unwrap();
        let b = run_qpv(&cfg(50), &ProverStrategy::BasisGuess { offset: 0.3 }, 9, &opts).unwrap();
        assert!(!a.trace.is_empty());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn traces_respect_causality() {
        let opts = RunOptions { record_trace: true, ..RunOptions::default() };
        let c = QpvConfig { speed_fraction: 0.5, ..cfg(20) };
        let run = run_qpv(&c, &ProverStrategy::BasisGuess { offset: 0.3 }, 1, &opts).unwrap();
        let positions: [f64; 5] = [-1.0, 0.0, 1.0, -0.3, 0.3];
        for r in &run.trace {
            let dist = (positions[r.origin] - positions[r.destination]).abs();
            assert!(r.arrive_time - r.depart_time >= dist - 1e-12);
            assert!(r.depart_time >= 0.0);
        }
        assert_eq!(run.stats.timing_failures, 0);
    }

    #[test]
    fn single_mode_requires_two_bases() {
        let c = QpvConfig { num_bases: 3, ..cfg(10) };
        assert!(matches!(run_qpv_single(&c, &ProverStrategy::Absent, 0), Err(QpvError::InvalidConfig(_))));
    }

    #[test]
    fn multi_basis_honest() {
        let c = QpvConfig { num_bases: 3, eta: 0.8, deviation_threshold: 0.03, ..cfg(200_000) };
        let opts = RunOptions { keep_records: false, ..RunOptions::default() };
        let run = run_qpv_multi_basis(&c, &ProverStrategy::Honest { eta: 0.8 }, 6, &opts).unwrap();
        assert!(run.delta_t() <= 0.02, "{}", run.delta_t());
        assert_eq!(run.verdict, Verdict::Pass);
        assert!(run.deviations.empty_cells.is_empty());
    }

    #[test]
    fn multi_basis_guessing_matches_eta_one_over_n() {
        for n in [3usize, 4] {
            let c = QpvConfig { num_bases: n, eta: 1.0 / n as f64, ..cfg(100_000) };
            let opts = RunOptions { keep_records: false, ..RunOptions::default() };
            let run = run_qpv_multi_basis(&c, &ProverStrategy::BasisGuess { offset: 0.5 }, 7, &opts).unwrap();
            let sigma = ((1.0 / n as f64) * (1.0 - 1.0 / n as f64) / 1e5).sqrt();
            assert!((run.stats.transmission() - 1.0 / n as f64).abs() < 4.0 * sigma);
            assert!(run.delta_t() < 0.02, "n = {n}: {}", run.delta_t());
            assert_eq!(run.stats.errors, 0);
        }
    }

    #[test]
    fn two_basis_modes_agree_on_round_checks() {
        let c = QpvConfig { deviation_threshold: 0.05, ..cfg(3000) };
        let opts = RunOptions::default();
        let strategies = [
            ProverStrategy::Honest { eta: 1.0 },
            ProverStrategy::Absent,
            ProverStrategy::SplitResponse { round: 7 },
            ProverStrategy::OffPositionRelay { offset: 0.2 },
        ];
        for s in &strategies {
            let single = run_qpv(&c, s, 11, &opts).unwrap();
            let multi = run_qpv_multi_basis(&c, s, 11, &opts).unwrap();
            assert_eq!(single.verdict, multi.verdict, "{s:?}");
            assert_eq!(single.stats.timing_failures, multi.stats.timing_failures);
            assert_eq!(single.stats.mismatch_failures, multi.stats.mismatch_failures);
        }
    }
}
