use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use qpvkex_core::kex::{run_protocol1, run_protocol3, ChannelAdversary, ExchangeOutcome, ExchangeSettings};
use qpvkex_core::msgauth::{
    robustness_bound_msg_auth, send_authenticated, soundness_bound_msg_auth, MsgAdversary, MsgAuthOutcome,
    MsgAuthSettings,
};
use qpvkex_core::qpv::{
    run_qpv, run_qpv_multi_basis, ProverStrategy, QpvConfig, QpvRoundRecord, QpvSummary, RunOptions,
};
use qpvkex_core::spacetime::SignalRecord;
use qpvkex_core::trials::{run_trials, stream, upper_bound, RateEstimate};
use qpvkex_core::BitString;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::output::{invalid, num, opt, read_config, runtime, write_file, Format, Report, Result, Table};
use crate::{parse, Ctx};

#[derive(Subcommand)]
pub enum SimulateCmd {
    /// One QPV run, or a sweep of runs over one parameter.
    Qpv(QpvArgs),
    /// Authenticated message transfer over repeated trials.
    Msgauth(MsgAuthArgs),
    /// Key exchange (protocol 1 or 3) over repeated trials.
    Keyexchange(KexArgs),
}

pub fn run(cmd: SimulateCmd, ctx: &Ctx) -> Result<Report> {
    match cmd {
        SimulateCmd::Qpv(a) => qpv(a, ctx),
        SimulateCmd::Msgauth(a) => msgauth(a, ctx),
        SimulateCmd::Keyexchange(a) => keyexchange(a, ctx),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Honest prover whose detection efficiency, and the verifiers'
    /// expectation of it, take each value.
    Eta,
    /// Prover measuring at a fixed angle, in radians.
    Angle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct QpvRunConfig {
    pub qpv: QpvConfig,
    pub strategy: ProverStrategy,
    pub seed: u64,
    /// Keep per-round records in the output.
    pub records: bool,
    /// Replaces `strategy` with one run per value; every run uses `seed`.
    pub sweep: Option<Sweep>,
}

impl Default for QpvRunConfig {
    fn default() -> Self {
        Self {
            qpv: QpvConfig::default(),
            strategy: ProverStrategy::Honest { eta: 1.0 },
            seed: 0,
            records: false,
            sweep: None,
        }
    }
}

impl QpvRunConfig {
    pub fn validate(&self) -> Result<()> {
        self.qpv.validate().map_err(invalid)?;
        self.strategy.validate().map_err(invalid)?;
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(invalid("sweep has no values"));
            }
            for &v in &s.values {
                let (cfg, st) = sweep_point(self, s.param, v);
                cfg.validate().map_err(invalid)?;
                st.validate().map_err(invalid)?;
            }
        }
        Ok(())
    }
}

#[derive(Args)]
pub struct QpvArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// honest[:eta], absent, abstract-pass[:eps], basis-guess[:offset],
    /// fixed-basis[:angle], off-position-relay[:offset], split-response[:round],
    /// or a JSON object.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    n_bits: Option<usize>,
    /// Detection probability the verifiers expect.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    num_bases: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Include per-round records.
    #[arg(long)]
    records: bool,
    /// eta=VALUES or angle=VALUES, VALUES being a,b,c or lo:hi:count.
    #[arg(long)]
    sweep: Option<String>,
    /// Write every signal as a JSON line to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl QpvArgs {
    fn resolve(&self) -> Result<QpvRunConfig> {
        let mut c: QpvRunConfig = match &self.config {
            Some(p) => read_config(p)?,
            None => QpvRunConfig::default(),
        };
        if let Some(s) = &self.strategy {
            c.strategy = parse::strategy(s)?;
        }
        if let Some(r) = self.rounds {
            c.qpv.rounds = r;
        }
        if let Some(n) = self.n_bits {
            c.qpv.n_bits = n;
        }
        if let Some(e) = self.eta {
            c.qpv.eta = e;
        }
        if let Some(b) = self.num_bases {
            c.qpv.num_bases = b;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c.records |= self.records;
        if let Some(s) = &self.sweep {
            let (name, values) = parse::named_values(s)?;
            let param = match name.as_str() {
                "eta" => SweepParam::Eta,
                "angle" => SweepParam::Angle,
                _ => return Err(invalid(format!("cannot sweep {name:?}; use eta or angle"))),
            };
            c.sweep = Some(Sweep { param, values });
        }
        c.validate()?;
        Ok(c)
    }
}

fn sweep_point(c: &QpvRunConfig, param: SweepParam, v: f64) -> (QpvConfig, ProverStrategy) {
    match param {
        SweepParam::Eta => (QpvConfig { eta: v, ..c.qpv.clone() }, ProverStrategy::Honest { eta: v }),
        SweepParam::Angle => (c.qpv.clone(), ProverStrategy::FixedBasis { angle: v }),
    }
}

struct QpvRunResult {
    summary: QpvSummary,
    records: Vec<QpvRoundRecord>,
    trace: Vec<SignalRecord>,
}

fn run_once(cfg: &QpvConfig, strategy: &ProverStrategy, seed: u64, opts: &RunOptions) -> Result<QpvRunResult> {
    if cfg.num_bases == 2 {
        let r = run_qpv(cfg, strategy, seed, opts).map_err(runtime)?;
        Ok(QpvRunResult { summary: r.summary(), records: r.records, trace: r.trace })
    } else {
        let r = run_qpv_multi_basis(cfg, strategy, seed, opts).map_err(runtime)?;
        Ok(QpvRunResult { summary: r.summary(), records: r.records, trace: r.trace })
    }
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: QpvSummary,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct QpvResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<QpvSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<QpvRoundRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepPoint>>,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct QpvOutput {
    pub config: QpvRunConfig,
    pub result: QpvResult,
}

fn summary_row(first: Option<f64>, s: &QpvSummary) -> Vec<String> {
    let mut row: Vec<String> = first.map(num).into_iter().collect();
    row.extend([
        s.rounds.to_string(),
        s.detections.to_string(),
        s.errors.to_string(),
        num(s.transmission),
        opt(s.conditional_error),
        opt(s.deviations.as_ref().map(|d| d.total)),
        s.verdict.passed().to_string(),
    ]);
    row
}

const SUMMARY_COLUMNS: [&str; 7] = ["rounds", "detections", "errors", "transmission", "error_rate", "delta_t", "passed"];

fn qpv(a: QpvArgs, _ctx: &Ctx) -> Result<Report> {
    let c = a.resolve()?;
    if let Some(sweep) = &c.sweep {
        if a.trace.is_some() {
            return Err(invalid("--trace needs a single run, not a sweep"));
        }
        let opts = RunOptions { keep_records: false, ..RunOptions::default() };
        let points = sweep
            .values
            .par_iter()
            .map(|&v| {
                let (cfg, st) = sweep_point(&c, sweep.param, v);
                Ok(SweepPoint { value: v, summary: run_once(&cfg, &st, c.seed, &opts)?.summary })
            })
            .collect::<Result<Vec<_>>>()?;
        let first = match sweep.param {
            SweepParam::Eta => "eta",
            SweepParam::Angle => "angle",
        };
        let mut header = vec![first];
        header.extend(SUMMARY_COLUMNS);
        let mut t = Table::new(&header);
        for p in &points {
            t.push(summary_row(Some(p.value), &p.summary));
        }
        let out = QpvOutput { config: c.clone(), result: QpvResult { summary: None, records: None, sweep: Some(points) } };
        return Ok(Report::new("simulate-qpv", Format::Csv, &out)?.table(t).config(&c)?);
    }
    let opts = RunOptions { keep_records: c.records, record_trace: a.trace.is_some(), ..RunOptions::default() };
    let r = run_once(&c.qpv, &c.strategy, c.seed, &opts)?;
    if let Some(path) = &a.trace {
        let mut buf = Vec::new();
        for s in &r.trace {
            serde_json::to_writer(&mut buf, s).map_err(runtime)?;
            buf.write_all(b"\n")?;
        }
        write_file(path, &buf)?;
    }
    let mut t = Table::new(&SUMMARY_COLUMNS);
    t.push(summary_row(None, &r.summary));
    let out = QpvOutput {
        config: c.clone(),
        result: QpvResult { summary: Some(r.summary), records: c.records.then_some(r.records), sweep: None },
    };
    Ok(Report::new("simulate-qpv", Format::Json, &out)?.table(t).config(&c)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct MsgAuthRunConfig {
    pub settings: MsgAuthSettings,
    /// Drawn from `seed` when absent; the resolved config always carries it.
    pub message: Option<BitString>,
    pub adversary: MsgAdversary,
    pub trials: u64,
    pub seed: u64,
    /// Include every trial's outcome.
    pub per_trial: bool,
}

impl Default for MsgAuthRunConfig {
    fn default() -> Self {
        Self {
            settings: MsgAuthSettings::default(),
            message: None,
            adversary: MsgAdversary::None,
            trials: 100,
            seed: 0,
            per_trial: false,
        }
    }
}

impl MsgAuthRunConfig {
    pub fn validate(&self) -> Result<()> {
        self.settings.build().map_err(invalid)?;
        self.adversary.validate().map_err(invalid)?;
        if self.trials == 0 {
            return Err(invalid("trials must be positive"));
        }
        if let Some(m) = &self.message {
            if m.len() > self.settings.message_bits {
                return Err(invalid(format!("message has {} bits, message_bits is {}", m.len(), self.settings.message_bits)));
            }
        }
        Ok(())
    }
}

#[derive(Args)]
pub struct MsgAuthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// A JSON object such as {"kind":"desync","shift":1,"forge_prob":0.1}, or `none`.
    #[arg(long)]
    adversary: Option<String>,
    /// Message bits; `0x` for hex.
    #[arg(long)]
    message: Option<String>,
    #[arg(long)]
    message_bits: Option<usize>,
    #[arg(long)]
    tag_bits: Option<usize>,
    /// Internal rounds per QPV run.
    #[arg(long)]
    rounds: Option<usize>,
    /// Chance the honest sender drops out of a run.
    #[arg(long)]
    eps_rob: Option<f64>,
    #[arg(long)]
    per_trial: bool,
}

impl MsgAuthArgs {
    fn resolve(&self) -> Result<MsgAuthRunConfig> {
        let mut c: MsgAuthRunConfig = match &self.config {
            Some(p) => read_config(p)?,
            None => MsgAuthRunConfig::default(),
        };
        if let Some(t) = self.trials {
            c.trials = t;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(a) = &self.adversary {
            c.adversary = parse::tagged(a, "adversary")?;
        }
        if let Some(m) = &self.message {
            c.message = Some(parse::bits(m)?);
        }
        if let Some(n) = self.message_bits {
            c.settings.message_bits = n;
        }
        if let Some(n) = self.tag_bits {
            c.settings.tag_bits = n;
        }
        if let Some(r) = self.rounds {
            c.settings.qpv.rounds = r;
        }
        if let Some(e) = self.eps_rob {
            c.settings.eps_rob = e;
        }
        c.per_trial |= self.per_trial;
        c.validate()?;
        if c.message.is_none() {
            c.message = Some(BitString::random(&mut stream(c.seed, u64::MAX), c.settings.message_bits));
        }
        Ok(c)
    }
}

fn adversary_pass_prob(a: &MsgAdversary) -> f64 {
    match a {
        MsgAdversary::FlipZeroToOne { pass_prob, .. } => *pass_prob,
        MsgAdversary::Desync { forge_prob, .. } | MsgAdversary::DelayMsgTag { forge_prob, .. } => *forge_prob,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct MsgAuthBounds {
    /// Evaluated with the adversary's per-run pass probability as `eps_qpv`.
    pub soundness: f64,
    pub robustness: f64,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct MsgAuthResult {
    pub trials: u64,
    pub auth_pass: RateEstimate,
    pub tamper_check_pass: RateEstimate,
    /// Accepted with a message other than the one sent.
    pub forged: RateEstimate,
    /// Tamper check passed on a codeword that decodes to the wrong key.
    pub key_mismatch_accepted: RateEstimate,
    /// One-sided 99% upper bound on the forgery rate.
    pub forged_upper_99: f64,
    pub bounds: MsgAuthBounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<MsgAuthOutcome>>,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct MsgAuthOutput {
    pub config: MsgAuthRunConfig,
    pub result: MsgAuthResult,
}

fn rate_rows(t: &mut Table, rows: &[(&str, RateEstimate)]) {
    for (name, r) in rows {
        t.push(vec![name.to_string(), r.successes.to_string(), r.trials.to_string(), num(r.rate)]);
    }
}

fn msgauth(a: MsgAuthArgs, ctx: &Ctx) -> Result<Report> {
    let c = a.resolve()?;
    let cfg = c.settings.build().map_err(invalid)?;
    let message = c.message.clone().expect("resolved");
    let outs = run_trials(c.trials, c.seed, ctx.parallel, |s| send_authenticated(&cfg, &message, &c.adversary, s))
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let forged = RateEstimate::count(&outs, |o| o.forged(&message));
    let result = MsgAuthResult {
        trials: c.trials,
        auth_pass: RateEstimate::count(&outs, |o| o.auth_pass),
        tamper_check_pass: RateEstimate::count(&outs, |o| o.tamper_check_pass),
        forged,
        key_mismatch_accepted: RateEstimate::count(&outs, |o| o.key_mismatch_accepted()),
        forged_upper_99: upper_bound(forged.successes, forged.trials, 0.99),
        bounds: MsgAuthBounds {
            soundness: soundness_bound_msg_auth(cfg.hash.key_bits, adversary_pass_prob(&c.adversary), cfg.hash.delta),
            robustness: robustness_bound_msg_auth(cfg.hash.key_bits, cfg.eps_rob),
        },
        outcomes: c.per_trial.then_some(outs),
    };
    let mut t = Table::new(&["event", "count", "trials", "rate"]);
    rate_rows(
        &mut t,
        &[
            ("auth_pass", result.auth_pass),
            ("tamper_check_pass", result.tamper_check_pass),
            ("forged", result.forged),
            ("key_mismatch_accepted", result.key_mismatch_accepted),
        ],
    );
    let out = MsgAuthOutput { config: c.clone(), result };
    Ok(Report::new("simulate-msgauth", Format::Json, &out)?.table(t).config(&c)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct KexRunConfig {
    /// 1 or 3.
    pub protocol: u8,
    pub settings: ExchangeSettings,
    pub adversary: ChannelAdversary,
    pub trials: u64,
    pub seed: u64,
    pub per_trial: bool,
}

impl Default for KexRunConfig {
    fn default() -> Self {
        Self {
            protocol: 1,
            settings: ExchangeSettings::default(),
            adversary: ChannelAdversary::none(),
            trials: 100,
            seed: 0,
            per_trial: false,
        }
    }
}

enum Exchange {
    P1(qpvkex_core::kex::Protocol1Config),
    P3(qpvkex_core::kex::Protocol3Config),
}

impl KexRunConfig {
    fn build(&self) -> Result<Exchange> {
        if !(0.0..=1.0).contains(&self.adversary.qpv_forge_prob) {
            return Err(invalid(format!("qpv_forge_prob = {} outside [0, 1]", self.adversary.qpv_forge_prob)));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be positive"));
        }
        match self.protocol {
            1 => Ok(Exchange::P1(self.settings.protocol1().map_err(invalid)?)),
            3 => Ok(Exchange::P3(self.settings.protocol3().map_err(invalid)?)),
            2 => Err(invalid("protocol 2 is message authentication; use `simulate msgauth`")),
            p => Err(invalid(format!("unknown protocol {p}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }
}

#[derive(Args)]
pub struct KexArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<u8>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// tamper_tag, block_final_qpv, impersonate_at_wrong_position, none, or a
    /// JSON object such as {"kind":"tamper_bob_messages","indices":[3]}.
    #[arg(long)]
    adversary: Option<String>,
    /// Chance the adversary passes a QPV run Bob skips.
    #[arg(long)]
    qpv_forge_prob: Option<f64>,
    #[arg(long)]
    signal_count: Option<usize>,
    #[arg(long)]
    qber: Option<f64>,
    #[arg(long)]
    per_trial: bool,
}

impl KexArgs {
    fn resolve(&self) -> Result<KexRunConfig> {
        let mut c: KexRunConfig = match &self.config {
            Some(p) => read_config(p)?,
            None => KexRunConfig::default(),
        };
        if let Some(p) = self.protocol {
            c.protocol = p;
        }
        if let Some(t) = self.trials {
            c.trials = t;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(a) = &self.adversary {
            c.adversary.attack = parse::tagged(a, "adversary")?;
        }
        if let Some(p) = self.qpv_forge_prob {
            c.adversary.qpv_forge_prob = p;
        }
        if let Some(n) = self.signal_count {
            c.settings.qkd.signal_count = n;
        }
        if let Some(q) = self.qber {
            c.settings.qkd.channel_qber = q;
        }
        c.per_trial |= self.per_trial;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct KexResult {
    pub trials: u64,
    /// Both parties hold the same key.
    pub keyed: RateEstimate,
    pub alice_only: RateEstimate,
    pub aborted: RateEstimate,
    /// Both hold keys that differ.
    pub key_mismatch: RateEstimate,
    /// Frequency of each indicator being set.
    pub events: BTreeMap<String, RateEstimate>,
    /// Outcomes breaking a structural guarantee; always 0 unless something is wrong.
    pub invariant_violations: u64,
    pub mean_key_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<ExchangeOutcome>>,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct KexOutput {
    pub config: KexRunConfig,
    pub result: KexResult,
}

fn keyexchange(a: KexArgs, ctx: &Ctx) -> Result<Report> {
    let c = a.resolve()?;
    let ex = c.build()?;
    let outs = run_trials(c.trials, c.seed, ctx.parallel, |s| match &ex {
        Exchange::P1(cfg) => run_protocol1(cfg, &c.adversary, s),
        Exchange::P3(cfg) => run_protocol3(cfg, &c.adversary, s),
    })
    .into_iter()
    .collect::<std::result::Result<Vec<_>, _>>()
    .map_err(runtime)?;
    let mut events = BTreeMap::new();
    for o in &outs {
        let flags = serde_json::to_value(o.indicators).map_err(runtime)?;
        for (k, v) in flags.as_object().expect("indicators serialise as an object") {
            let e = events.entry(k.clone()).or_insert(0u64);
            *e += (v.as_bool() == Some(true)) as u64;
        }
    }
    let n = outs.len() as u64;
    let keyed_bits: usize = outs.iter().filter_map(|o| o.key_a.as_ref().filter(|_| o.key_a == o.key_b)).map(|k| k.len()).sum();
    let keyed = RateEstimate::count(&outs, |o| o.key_a.is_some() && o.key_a == o.key_b);
    let result = KexResult {
        trials: n,
        keyed,
        alice_only: RateEstimate::count(&outs, |o| o.alice_only()),
        aborted: RateEstimate::count(&outs, |o| o.aborted()),
        key_mismatch: RateEstimate::count(&outs, |o| o.key_a.is_some() && o.key_b.is_some() && o.key_a != o.key_b),
        events: events.into_iter().map(|(k, v)| (k, RateEstimate::new(v, n))).collect(),
        invariant_violations: outs.iter().filter(|o| o.check_invariants().is_err()).count() as u64,
        mean_key_bits: if keyed.successes > 0 { keyed_bits as f64 / keyed.successes as f64 } else { 0.0 },
        outcomes: c.per_trial.then_some(outs),
    };
    let mut t = Table::new(&["event", "count", "trials", "rate"]);
    rate_rows(
        &mut t,
        &[
            ("keyed", result.keyed),
            ("alice_only", result.alice_only),
            ("aborted", result.aborted),
            ("key_mismatch", result.key_mismatch),
        ],
    );
    for (k, r) in &result.events {
        rate_rows(&mut t, &[(k.as_str(), *r)]);
    }
    let out = KexOutput { config: c.clone(), result };
    Ok(Report::new("simulate-keyexchange", Format::Json, &out)?.table(t).config(&c)?)
}
