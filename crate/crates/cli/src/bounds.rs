use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use qpvkex_core::bounds::{
    self, alpha_frac, classical_rounding_size, eps_lower_bound, eta_sweep, lp_error_lower_bound, net_sizes,
    nu_argument, nu_value, rounding_log_term, thm1_bound, AlphaNorm, Bound, BoundsError, DeltaTildeTable,
    Fig2Params, Fig2Point, Lookup, ManifestEntry, NetSizes, OptimizerGrid, PartitionParams, SecurityParams,
    Thm1Variant,
};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::output::{invalid, num, opt, read_config, read_file, runtime, Format, Report, Result, Table};
use crate::{parse, Ctx};

#[derive(Subcommand)]
pub enum BoundsCmd {
    /// QKD closed by a hash check and a QPV run; both hash-term variants.
    Thm1(Thm1Args),
    /// Message authentication: soundness and robustness.
    Protocol2(ProtocolArgs),
    /// Key exchange with authenticated key transfer: security and robustness.
    Protocol3(ProtocolArgs),
    /// Log sizes of the δ-nets for a q-qubit strategy.
    Nets(NetsArgs),
    /// Size of the classical rounding set.
    Rounding(RoundingArgs),
    /// ν from q0, δ̃ and α.
    Nu(NuArgs),
    /// Error-rate lower bound, or the partition LP bound with --eta-r.
    EpsLb(EpsLbArgs),
    /// Best error-rate lower bound against transmission, per q0.
    Fig2(Fig2Args),
    /// Every bound this tool evaluates.
    Manifest,
}

pub fn run(cmd: BoundsCmd, _ctx: &Ctx) -> Result<Report> {
    match cmd {
        BoundsCmd::Thm1(a) => thm1(a),
        BoundsCmd::Protocol2(a) => protocol(2, a),
        BoundsCmd::Protocol3(a) => protocol(3, a),
        BoundsCmd::Nets(a) => nets(a),
        BoundsCmd::Rounding(a) => rounding(a),
        BoundsCmd::Nu(a) => nu(a),
        BoundsCmd::EpsLb(a) => eps_lb(a),
        BoundsCmd::Fig2(a) => fig2(a),
        BoundsCmd::Manifest => manifest(),
    }
}

fn domain(e: BoundsError) -> crate::output::CliError {
    invalid(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    #[value(alias = "paper-literal")]
    Paper,
    Exponential,
}

impl From<VariantArg> for Thm1Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Paper => Thm1Variant::PaperLiteral,
            VariantArg::Exponential => Thm1Variant::Exponential,
        }
    }
}

fn variant_name(v: Thm1Variant) -> &'static str {
    match v {
        Thm1Variant::PaperLiteral => "paper-literal",
        Thm1Variant::Exponential => "exponential",
    }
}

#[derive(Args)]
pub struct Thm1Args {
    #[arg(long)]
    eps_qkd: f64,
    #[arg(long)]
    l_t: usize,
    #[arg(long)]
    eps_qpv: f64,
    /// Only this hash term: `paper` is 1/l_T, `exponential` is 2^-l_T.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Evaluate for every tag length from --l-t to this.
    #[arg(long)]
    l_t_max: Option<usize>,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct Thm1Row {
    pub variant: Thm1Variant,
    pub l_t: usize,
    pub value: f64,
    pub raw: f64,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct Thm1Output {
    pub eps_qkd: f64,
    pub eps_qpv: f64,
    pub rows: Vec<Thm1Row>,
}

fn thm1(a: Thm1Args) -> Result<Report> {
    let variants: Vec<Thm1Variant> = match a.variant {
        Some(v) => vec![v.into()],
        None => vec![Thm1Variant::PaperLiteral, Thm1Variant::Exponential],
    };
    let hi = a.l_t_max.unwrap_or(a.l_t);
    if hi < a.l_t {
        return Err(invalid(format!("--l-t-max {hi} is below --l-t {}", a.l_t)));
    }
    let mut rows = vec![];
    for &variant in &variants {
        for l_t in a.l_t..=hi {
            let b = thm1_bound(a.eps_qkd, l_t, a.eps_qpv, variant).map_err(domain)?;
            rows.push(Thm1Row { variant, l_t, value: b.value, raw: b.raw });
        }
    }
    let mut t = Table::new(&["variant", "l_t", "value", "raw"]);
    for r in &rows {
        t.push(vec![variant_name(r.variant).into(), r.l_t.to_string(), num(r.value), num(r.raw)]);
    }
    let text = if rows.len() == 1 {
        num(rows[0].value)
    } else {
        rows.iter().map(|r| format!("{} l_t={} {}", variant_name(r.variant), r.l_t, num(r.value))).collect::<Vec<_>>().join("\n")
    };
    let curve = a.l_t_max.is_some();
    let out = Thm1Output { eps_qkd: a.eps_qkd, eps_qpv: a.eps_qpv, rows };
    let format = if curve { Format::Csv } else { Format::Text };
    Ok(Report::new("bounds-thm1", format, &out)?.table(t).text(text))
}

#[derive(Args)]
pub struct ProtocolArgs {
    /// JSON security parameters; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eps_qkd: Option<f64>,
    #[arg(long)]
    eps_qpv: Option<f64>,
    #[arg(long)]
    eps_rob_qkd: Option<f64>,
    #[arg(long)]
    eps_rob_qpv: Option<f64>,
    /// Collision probability of the hash family.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    l_k: Option<usize>,
    #[arg(long)]
    l_t: Option<usize>,
    #[arg(long)]
    l_c: Option<usize>,
    /// FIELD=VALUES: evaluate along one parameter, e.g. eps_qpv=0:0.01:11.
    #[arg(long)]
    sweep: Option<String>,
}

impl ProtocolArgs {
    fn resolve(&self) -> Result<SecurityParams> {
        let mut p: SecurityParams = match &self.config {
            Some(path) => read_config(path)?,
            None => SecurityParams::default(),
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.eps_qkd, self.eps_qkd);
        set(&mut p.eps_qpv, self.eps_qpv);
        set(&mut p.eps_rob_qkd, self.eps_rob_qkd);
        set(&mut p.eps_rob_qpv, self.eps_rob_qpv);
        set(&mut p.delta_hash, self.delta);
        p.l_k = self.l_k.unwrap_or(p.l_k);
        p.l_t = self.l_t.unwrap_or(p.l_t);
        p.l_c = self.l_c.unwrap_or(p.l_c);
        p.validate().map_err(domain)?;
        Ok(p)
    }
}

/// `p` with `field` set to `x`, through its JSON form so any numeric field works.
fn with_field(p: &SecurityParams, field: &str, x: f64) -> Result<SecurityParams> {
    let mut v = serde_json::to_value(p).map_err(runtime)?;
    let obj = v.as_object_mut().expect("params serialise as an object");
    let slot = obj.get_mut(field).ok_or_else(|| invalid(format!("no parameter {field:?}")))?;
    *slot = if slot.is_u64() {
        if !(x >= 0.0 && x.fract() == 0.0) {
            return Err(invalid(format!("{field} takes nonnegative integers, got {x}")));
        }
        serde_json::json!(x as u64)
    } else {
        serde_json::json!(x)
    };
    serde_json::from_value(v).map_err(invalid)
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct ProtocolPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Soundness for protocol 2, security for protocol 3.
    pub security: Bound,
    pub robustness: Bound,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct ProtocolOutput {
    pub protocol: u8,
    pub params: SecurityParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    pub points: Vec<ProtocolPoint>,
}

fn protocol(n: u8, a: ProtocolArgs) -> Result<Report> {
    let p = a.resolve()?;
    let eval = |q: &SecurityParams| -> Result<(Bound, Bound)> {
        q.validate().map_err(domain)?;
        Ok(match n {
            2 => (bounds::protocol2_soundness(q).map_err(domain)?, bounds::protocol2_robustness(q).map_err(domain)?),
            _ => (bounds::protocol3_security(q).map_err(domain)?, bounds::protocol3_robustness(q).map_err(domain)?),
        })
    };
    let label = if n == 2 { "soundness" } else { "security" };
    let (sweep, points) = match &a.sweep {
        Some(s) => {
            let (field, xs) = parse::named_values(s)?;
            let mut pts = vec![];
            for x in xs {
                let (security, robustness) = eval(&with_field(&p, &field, x)?)?;
                pts.push(ProtocolPoint { x: Some(x), security, robustness });
            }
            (Some(field), pts)
        }
        None => {
            let (security, robustness) = eval(&p)?;
            (None, vec![ProtocolPoint { x: None, security, robustness }])
        }
    };
    let first = sweep.clone().unwrap_or_else(|| "point".into());
    let mut t = Table::new(&[&first, label, &format!("{label}_raw"), "robustness", "robustness_raw"]);
    for (i, pt) in points.iter().enumerate() {
        t.push(vec![
            pt.x.map(num).unwrap_or_else(|| i.to_string()),
            num(pt.security.value),
            num(pt.security.raw),
            num(pt.robustness.value),
            num(pt.robustness.raw),
        ]);
    }
    let text = match (&sweep, points.as_slice()) {
        (None, [pt]) => format!("{label} {}\nrobustness {}", num(pt.security.value), num(pt.robustness.value)),
        _ => String::new(),
    };
    let format = if sweep.is_some() { Format::Csv } else { Format::Text };
    let out = ProtocolOutput { protocol: n, params: p, sweep, points };
    let name = if n == 2 { "bounds-protocol2" } else { "bounds-protocol3" };
    let mut r = Report::new(name, format, &out)?.table(t).config(&p)?;
    if !text.is_empty() {
        r = r.text(text);
    }
    Ok(r)
}

#[derive(Args)]
pub struct NetsArgs {
    /// Qubits of the adversary's strategy.
    #[arg(long)]
    q: u32,
    #[arg(long)]
    delta: f64,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct NetsOutput {
    pub q: u32,
    pub delta: f64,
    pub sizes: NetSizes,
}

fn nets(a: NetsArgs) -> Result<Report> {
    let s = net_sizes(a.q, a.delta).map_err(domain)?;
    let mut t = Table::new(&["q", "delta", "log2_ns", "log2_na", "log2_nb"]);
    t.push(vec![a.q.to_string(), num(a.delta), num(s.log2_ns), num(s.log2_na), num(s.log2_nb)]);
    let text = format!("log2_ns {}\nlog2_na {}\nlog2_nb {}", num(s.log2_ns), num(s.log2_na), num(s.log2_nb));
    Ok(Report::new("bounds-nets", Format::Text, &NetsOutput { q: a.q, delta: a.delta, sizes: s })?.table(t).text(text))
}

#[derive(Args)]
pub struct RoundingArgs {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    delta_tilde: f64,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct RoundingOutput {
    pub q: u32,
    pub delta_tilde: f64,
    /// `ceil(log2(1 + 12/δ̃))`.
    pub log_term: u64,
    /// Decimal, since it can exceed 64 bits.
    pub k: String,
}

fn rounding(a: RoundingArgs) -> Result<Report> {
    let k = classical_rounding_size(a.q, a.delta_tilde).map_err(domain)?;
    let log_term = rounding_log_term(a.delta_tilde).map_err(domain)?;
    let out = RoundingOutput { q: a.q, delta_tilde: a.delta_tilde, log_term, k: k.to_string() };
    let mut t = Table::new(&["q", "delta_tilde", "log_term", "k"]);
    t.push(vec![a.q.to_string(), num(a.delta_tilde), log_term.to_string(), out.k.clone()]);
    let text = out.k.clone();
    Ok(Report::new("bounds-rounding", Format::Text, &out)?.table(t).text(text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlphaNormArg {
    /// α/2^(2n)
    PairSpace,
    /// α/2^n; needs --n
    InputSpace,
}

impl From<AlphaNormArg> for AlphaNorm {
    fn from(a: AlphaNormArg) -> Self {
        match a {
            AlphaNormArg::PairSpace => AlphaNorm::PairSpace,
            AlphaNormArg::InputSpace => AlphaNorm::InputSpace,
        }
    }
}

#[derive(Args)]
pub struct AlphaArgs {
    /// α as a fraction, normalised per --alpha-norm.
    #[arg(long, default_value_t = 0.0)]
    alpha_frac: f64,
    #[arg(long, value_enum, default_value = "pair-space")]
    alpha_norm: AlphaNormArg,
    /// Challenge length n, for --alpha-norm input-space.
    #[arg(long)]
    n: Option<u32>,
}

impl AlphaArgs {
    fn pair_space(&self) -> Result<f64> {
        alpha_frac(self.alpha_frac, self.alpha_norm.into(), self.n).map_err(domain)
    }
}

#[derive(Args)]
pub struct NuArgs {
    #[arg(long)]
    q0: f64,
    #[arg(long)]
    delta_tilde: f64,
    #[command(flatten)]
    alpha: AlphaArgs,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct NuOutput {
    pub q0: f64,
    pub delta_tilde: f64,
    /// `α/2^(2n)`.
    pub alpha_frac: f64,
    /// The binary entropy ν must reach.
    pub argument: f64,
    pub feasible: bool,
    pub nu: Option<f64>,
}

fn nu(a: NuArgs) -> Result<Report> {
    let af = a.alpha.pair_space()?;
    let argument = nu_argument(a.q0, a.delta_tilde, af).map_err(domain)?;
    let nu = match nu_value(a.q0, a.delta_tilde, af) {
        Ok(v) => Some(v),
        Err(BoundsError::Infeasible(_)) => None,
        Err(e) => return Err(domain(e)),
    };
    let out = NuOutput { q0: a.q0, delta_tilde: a.delta_tilde, alpha_frac: af, argument, feasible: nu.is_some(), nu };
    let mut t = Table::new(&["q0", "delta_tilde", "alpha_frac", "argument", "feasible", "nu"]);
    t.push(vec![num(a.q0), num(a.delta_tilde), num(af), num(argument), out.feasible.to_string(), opt(nu)]);
    let text = nu.map(num).unwrap_or_else(|| "infeasible".into());
    Ok(Report::new("bounds-nu", Format::Text, &out)?.table(t).text(text))
}

#[derive(Args)]
pub struct EpsLbArgs {
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    eta_thres: f64,
    #[arg(long)]
    eps_thres: f64,
    #[arg(long)]
    nu: f64,
    /// α in `1 - 2^-α`; infinite when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// Transmission of a sub-strategy: evaluates the partition LP bound instead.
    #[arg(long)]
    eta_r: Option<f64>,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct EpsLbOutput {
    pub eta: f64,
    pub eta_thres: f64,
    pub eps_thres: f64,
    pub nu: f64,
    /// Absent means infinite.
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_r: Option<f64>,
    pub value: f64,
    pub raw: f64,
}

fn eps_lb(a: EpsLbArgs) -> Result<Report> {
    let (value, raw) = match a.eta_r {
        Some(eta_r) => {
            let v = lp_error_lower_bound(eta_r, a.eta_thres, a.eps_thres, a.eta, a.nu).map_err(domain)?;
            (v, v)
        }
        None => {
            let b = eps_lower_bound(&PartitionParams {
                eta: a.eta,
                eta_thres: a.eta_thres,
                eps_thres: a.eps_thres,
                nu: a.nu,
                alpha: a.alpha.unwrap_or(f64::INFINITY),
            })
            .map_err(domain)?;
            (b.value, b.raw)
        }
    };
    let out = EpsLbOutput {
        eta: a.eta,
        eta_thres: a.eta_thres,
        eps_thres: a.eps_thres,
        nu: a.nu,
        alpha: a.alpha,
        eta_r: a.eta_r,
        value,
        raw,
    };
    let mut t = Table::new(&["eta", "eta_thres", "eps_thres", "nu", "alpha", "eta_r", "eps_lb", "raw"]);
    t.push(vec![num(a.eta), num(a.eta_thres), num(a.eps_thres), num(a.nu), opt(a.alpha), opt(a.eta_r), num(value), num(raw)]);
    Ok(Report::new("bounds-eps-lb", Format::Text, &out)?.table(t).text(num(value)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Config {
    pub q0: Vec<f64>,
    pub etas: Vec<f64>,
    /// `α/2^(2n)` inside ν.
    pub alpha_frac: f64,
    /// α in the prefactor; absent means infinite.
    pub alpha: Option<f64>,
    pub grid: OptimizerGrid,
    /// δ̃ table JSON; the bundled synthetic table when absent.
    pub table: Option<PathBuf>,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            q0: vec![5.0, 10.0, 15.0],
            etas: (0..=100).map(|i| i as f64 / 100.0).collect(),
            alpha_frac: 1e-10,
            alpha: None,
            grid: OptimizerGrid::default(),
            table: None,
        }
    }
}

impl Fig2Config {
    pub fn load_table(&self) -> Result<DeltaTildeTable> {
        match &self.table {
            Some(p) => DeltaTildeTable::from_json(&read_file(p)?).map_err(|e| invalid(format!("{}: {e}", p.display()))),
            None => Ok(DeltaTildeTable::stub()),
        }
    }

    pub fn validate(&self) -> Result<DeltaTildeTable> {
        if self.q0.is_empty() || self.etas.is_empty() {
            return Err(invalid("q0 and etas must be nonempty"));
        }
        if let Some(a) = self.alpha {
            if !(a >= 0.0) {
                return Err(invalid(format!("alpha = {a} must be nonnegative")));
            }
        }
        self.load_table()
    }
}

#[derive(Args)]
pub struct Fig2Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Adversary memory parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    q0: Option<Vec<f64>>,
    /// Transmissions: a,b,c or lo:hi:count.
    #[arg(long)]
    etas: Option<String>,
    /// δ̃ table JSON from the SDP solver.
    #[arg(long)]
    table: Option<PathBuf>,
    #[command(flatten)]
    alpha_frac: Fig2Alpha,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    lookup: Option<LookupArg>,
    #[arg(long)]
    eta_thres_step: Option<f64>,
    /// ε̃ grid: a,b,c or lo:hi:count (log-spaced when prefixed with `log:`).
    #[arg(long)]
    eps_tilde: Option<String>,
}

#[derive(Args)]
pub struct Fig2Alpha {
    /// α as a fraction, normalised per --alpha-norm.
    #[arg(long = "alpha-frac")]
    value: Option<f64>,
    #[arg(long = "alpha-norm", value_enum, default_value = "pair-space")]
    norm: AlphaNormArg,
    #[arg(long = "n")]
    n: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LookupArg {
    Conservative,
    Bilinear,
}

fn eps_tilde_grid(s: &str) -> Result<Vec<f64>> {
    match s.strip_prefix("log:") {
        Some(rest) => {
            let parts: Vec<&str> = rest.split(':').collect();
            let [lo, hi, count] = parts.as_slice() else {
                return Err(invalid(format!("{s:?}: expected log:lo:hi:count")));
            };
            let f = |t: &str| t.parse::<f64>().map_err(|_| invalid(format!("{s:?}: not a number")));
            let count = count.parse::<usize>().map_err(|_| invalid(format!("{s:?}: bad count")))?;
            let (lo, hi) = (f(lo)?, f(hi)?);
            if !(lo > 0.0 && hi > 0.0) {
                return Err(invalid("log grid needs positive ends"));
            }
            Ok(bounds::logspace(lo, hi, count))
        }
        None => parse::values(s),
    }
}

impl Fig2Args {
    fn resolve(&self) -> Result<Fig2Config> {
        let mut c: Fig2Config = match &self.config {
            Some(p) => read_config(p)?,
            None => Fig2Config::default(),
        };
        if let Some(q) = &self.q0 {
            c.q0 = q.clone();
        }
        if let Some(e) = &self.etas {
            c.etas = parse::values(e)?;
        }
        if let Some(t) = &self.table {
            c.table = Some(t.clone());
        }
        if let Some(v) = self.alpha_frac.value {
            c.alpha_frac = alpha_frac(v, self.alpha_frac.norm.into(), self.alpha_frac.n).map_err(domain)?;
        }
        if self.alpha.is_some() {
            c.alpha = self.alpha;
        }
        if let Some(l) = self.lookup {
            c.grid.lookup = match l {
                LookupArg::Conservative => Lookup::Conservative,
                LookupArg::Bilinear => Lookup::Bilinear,
            };
        }
        if let Some(s) = self.eta_thres_step {
            c.grid.eta_thres_step = s;
        }
        if let Some(e) = &self.eps_tilde {
            c.grid.eps_tilde = eps_tilde_grid(e)?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct Fig2Output {
    pub config: Fig2Config,
    pub table_provenance: Option<String>,
    pub points: Vec<Fig2Point>,
}

fn fig2(a: Fig2Args) -> Result<Report> {
    let c = a.resolve()?;
    let table = c.validate()?;
    let provenance = table.provenance().map(str::to_string);
    if provenance.as_deref().is_some_and(|p| p.contains("synthetic-stub")) {
        eprintln!("warning: using the bundled synthetic delta-tilde table; pass --table for solver output");
    }
    let mut points = vec![];
    for &q0 in &c.q0 {
        let params = Fig2Params { q0, alpha_frac: c.alpha_frac, alpha: c.alpha };
        points.extend(eta_sweep(&c.etas, &params, &table, &c.grid).map_err(domain)?);
    }
    let mut t = Table::new(&[
        "q0",
        "eta",
        "eps_lb",
        "eta_thres",
        "eps_thres",
        "eps_tilde",
        "delta_tilde",
        "nu",
        "all_infeasible",
    ]);
    for p in &points {
        t.push(vec![
            num(p.q0),
            num(p.eta),
            num(p.best_eps_lb),
            opt(p.eta_thres),
            opt(p.eps_thres),
            opt(p.eps_tilde),
            opt(p.delta_tilde),
            opt(p.nu),
            p.all_infeasible.to_string(),
        ]);
    }
    let out = Fig2Output { config: c.clone(), table_provenance: provenance, points };
    Ok(Report::new("bounds-fig2", Format::Csv, &out)?.table(t).config(&c)?)
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct ManifestOutput {
    pub entries: Vec<ManifestEntry>,
}

fn manifest() -> Result<Report> {
    let entries = bounds::manifest();
    let mut t = Table::new(&["name", "formula", "command"]);
    let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
    let mut text = String::new();
    for e in &entries {
        t.push(vec![e.name.into(), e.formula.into(), e.command.into()]);
        text.push_str(&format!("{:width$}  {}\n    {}\n", e.name, e.command, e.formula));
    }
    Ok(Report::new("bounds-manifest", Format::Text, &ManifestOutput { entries })?.table(t).text(text))
}
