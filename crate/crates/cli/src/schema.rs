use std::path::PathBuf;

use clap::Args;
use qpvkex_core::bounds::{DeltaTildeTable, SecurityParams};
use schemars::generate::SchemaSettings;
use schemars::{JsonSchema, Schema};
use serde_json::Value;

use crate::bounds::{
    EpsLbOutput, Fig2Config, Fig2Output, ManifestOutput, NetsOutput, NuOutput, ProtocolOutput, RoundingOutput, Thm1Output,
};
use crate::output::{invalid, runtime, to_json_bytes, write_file, Format, Report, Result};
use crate::simulate::{KexOutput, KexRunConfig, MsgAuthOutput, MsgAuthRunConfig, QpvOutput, QpvRunConfig};
use crate::tools::{CodecOutput, HashOutput, ValidateOutput};

/// What a config file may contain.
fn input<T: JsonSchema>() -> Schema {
    SchemaSettings::draft2020_12().for_deserialize().into_generator().into_root_schema_for::<T>()
}

/// What a command prints.
fn output<T: JsonSchema>() -> Schema {
    SchemaSettings::draft2020_12().for_serialize().into_generator().into_root_schema_for::<T>()
}

/// Every published schema, by file stem. Output schemas are named after the
/// command that prints them with `--format json`.
pub fn all() -> Vec<(&'static str, Schema)> {
    vec![
        ("qpv-run-config", input::<QpvRunConfig>()),
        ("msgauth-run-config", input::<MsgAuthRunConfig>()),
        ("keyexchange-run-config", input::<KexRunConfig>()),
        ("security-params", input::<SecurityParams>()),
        ("fig2-config", input::<Fig2Config>()),
        ("delta-tilde-table", input::<DeltaTildeTable>()),
        ("simulate-qpv", output::<QpvOutput>()),
        ("simulate-msgauth", output::<MsgAuthOutput>()),
        ("simulate-keyexchange", output::<KexOutput>()),
        ("bounds-thm1", output::<Thm1Output>()),
        ("bounds-protocol2", output::<ProtocolOutput>()),
        ("bounds-protocol3", output::<ProtocolOutput>()),
        ("bounds-nets", output::<NetsOutput>()),
        ("bounds-rounding", output::<RoundingOutput>()),
        ("bounds-nu", output::<NuOutput>()),
        ("bounds-eps-lb", output::<EpsLbOutput>()),
        ("bounds-fig2", output::<Fig2Output>()),
        ("bounds-manifest", output::<ManifestOutput>()),
        ("codec", output::<CodecOutput>()),
        ("hash", output::<HashOutput>()),
        ("validate", output::<ValidateOutput>()),
    ]
}

#[derive(Args)]
pub struct SchemaArgs {
    /// Print this schema; without it, list the names.
    name: Option<String>,
    /// Write every schema as NAME.json into this directory.
    #[arg(long)]
    write: Option<PathBuf>,
}

pub fn run(a: SchemaArgs) -> Result<Report> {
    let schemas = all();
    if let Some(dir) = &a.write {
        for (name, s) in &schemas {
            write_file(&dir.join(format!("{name}.json")), &to_json_bytes(s.as_value())?)?;
        }
        let names: Vec<&str> = schemas.iter().map(|(n, _)| *n).collect();
        let text = format!("wrote {} schemas to {}", names.len(), dir.display());
        return Ok(Report::new("schema", Format::Text, &names)?.text(text));
    }
    match &a.name {
        Some(name) => {
            let (_, s) = schemas
                .into_iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| invalid(format!("no schema named {name:?}; run `schema` for the list")))?;
            let v: Value = s.to_value();
            let text = serde_json::to_string_pretty(&v).map_err(runtime)?;
            Ok(Report::new("schema", Format::Json, &v)?.text(text))
        }
        None => {
            let names: Vec<&str> = schemas.iter().map(|(n, _)| *n).collect();
            Ok(Report::new("schema", Format::Text, &names)?.text(names.join("\n")))
        }
    }
}
