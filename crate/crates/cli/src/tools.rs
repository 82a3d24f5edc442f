use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use qpvkex_core::auth::{hash_tag, CodecParams, HashFamilyParams};
use qpvkex_core::bounds::{DeltaTildeTable, SecurityParams};
use qpvkex_core::BitString;
use schemars::JsonSchema;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::bounds::Fig2Config;
use crate::output::{invalid, read_file, Format, Report, Result, Table};
use crate::parse;
use crate::simulate::{KexRunConfig, MsgAuthRunConfig, QpvRunConfig};

#[derive(Subcommand)]
pub enum CodecCmd {
    /// Key to constant-weight codeword.
    Enc {
        /// Key length l_K.
        #[arg(long)]
        lk: usize,
        /// Key bits, or `0x` hex; padded or trimmed to l_K bits.
        #[arg(long)]
        key: String,
        /// Print hex instead of binary.
        #[arg(long)]
        hex: bool,
    },
    /// Codeword back to key, after the tamper check.
    Dec {
        #[arg(long)]
        lk: usize,
        #[arg(long)]
        codeword: String,
        #[arg(long)]
        hex: bool,
    },
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct CodecOutput {
    pub params: CodecParams,
    pub key: Option<BitString>,
    pub codeword: BitString,
    pub tamper_check_pass: bool,
}

fn show(b: &BitString, hex: bool) -> String {
    if hex {
        format!("0x{}", b.to_hex())
    } else {
        b.to_binary()
    }
}

pub fn codec(cmd: CodecCmd) -> Result<Report> {
    let (out, hex, text) = match cmd {
        CodecCmd::Enc { lk, key, hex } => {
            let params = CodecParams::new(lk).map_err(invalid)?;
            let key = parse::fit(parse::bits(&key)?, lk)?;
            let codeword = params.encode(&key).map_err(invalid)?;
            let text = show(&codeword, hex);
            (CodecOutput { tamper_check_pass: params.tamper_check(&codeword), params, key: Some(key), codeword }, hex, text)
        }
        CodecCmd::Dec { lk, codeword, hex } => {
            let params = CodecParams::new(lk).map_err(invalid)?;
            let codeword = parse::fit(parse::bits(&codeword)?, params.code_length)?;
            let pass = params.tamper_check(&codeword);
            let key = if pass { Some(params.decode(&codeword).map_err(invalid)?) } else { None };
            // a failed tamper check is an answer, not an error
            let text = key.as_ref().map_or_else(|| "rejected".into(), |k| show(k, hex));
            (CodecOutput { params, key, codeword, tamper_check_pass: pass }, hex, text)
        }
    };
    let mut t = Table::new(&["l_k", "key", "codeword", "tamper_check_pass"]);
    t.push(vec![
        out.params.key_bits.to_string(),
        out.key.as_ref().map(|k| show(k, hex)).unwrap_or_default(),
        show(&out.codeword, hex),
        out.tamper_check_pass.to_string(),
    ]);
    Ok(Report::new("codec", Format::Text, &out)?.table(t).text(text))
}

#[derive(Subcommand)]
pub enum HashCmd {
    /// Tag of a message under a key from the polynomial hash family.
    Tag {
        /// Message length the family is built for; defaults to the message's.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        l_t: usize,
        /// Hash key of l_K bits, or `0x` hex.
        #[arg(long)]
        key: String,
        #[arg(long)]
        message: String,
        #[arg(long)]
        hex: bool,
    },
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct HashOutput {
    pub params: HashFamilyParams,
    pub message: BitString,
    pub tag: BitString,
}

pub fn hash(cmd: HashCmd) -> Result<Report> {
    let HashCmd::Tag { n, l_t, key, message, hex } = cmd;
    let message = parse::bits(&message)?;
    let params = HashFamilyParams::new(n.unwrap_or(message.len()), l_t).map_err(invalid)?;
    if message.len() > params.message_bits {
        return Err(invalid(format!("message has {} bits, the family takes {}", message.len(), params.message_bits)));
    }
    let key = parse::fit(parse::bits(&key)?, params.key_bits)?;
    let tag = hash_tag(&params, &key, &message).map_err(invalid)?;
    let text = show(&tag, hex);
    let mut t = Table::new(&["n", "l_t", "l_k", "tag"]);
    t.push(vec![params.message_bits.to_string(), l_t.to_string(), params.key_bits.to_string(), text.clone()]);
    Ok(Report::new("hash", Format::Text, &HashOutput { params, message, tag })?.table(t).text(text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// `simulate qpv` run config
    Qpv,
    /// `simulate msgauth` run config
    Msgauth,
    /// `simulate keyexchange` run config
    Keyexchange,
    /// `bounds protocol2|protocol3` parameters
    Security,
    /// `bounds fig2` config
    Fig2,
    /// δ̃ table
    Table,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    file: PathBuf,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct ValidateOutput {
    pub kind: String,
    pub valid: bool,
    /// The config with every default filled in.
    pub resolved: Value,
}

fn parse_json<T: DeserializeOwned>(s: &str, a: &ValidateArgs) -> Result<T> {
    serde_json::from_str(s).map_err(|e| invalid(format!("{}: {e}", a.file.display())))
}

fn resolved<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(crate::output::runtime)
}

pub fn validate(a: ValidateArgs) -> Result<Report> {
    let s = read_file(&a.file)?;
    let resolved = match a.kind {
        Kind::Qpv => {
            let c: QpvRunConfig = parse_json(&s, &a)?;
            c.validate()?;
            resolved(&c)?
        }
        Kind::Msgauth => {
            let c: MsgAuthRunConfig = parse_json(&s, &a)?;
            c.validate()?;
            resolved(&c)?
        }
        Kind::Keyexchange => {
            let c: KexRunConfig = parse_json(&s, &a)?;
            c.validate()?;
            resolved(&c)?
        }
        Kind::Security => {
            let c: SecurityParams = parse_json(&s, &a)?;
            c.validate().map_err(invalid)?;
            resolved(&c)?
        }
        Kind::Fig2 => {
            let c: Fig2Config = parse_json(&s, &a)?;
            c.validate()?;
            resolved(&c)?
        }
        Kind::Table => {
            let t = DeltaTildeTable::from_json(&s).map_err(invalid)?;
            resolved(&t)?
        }
    };
    let kind = format!("{:?}", a.kind).to_lowercase();
    let out = ValidateOutput { kind: kind.clone(), valid: true, resolved };
    Ok(Report::new("validate", Format::Text, &out)?.text(format!("ok {kind}")))
}
