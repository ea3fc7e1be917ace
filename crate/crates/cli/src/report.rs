use crate::{Cli, ModeArg};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Canonical description of the experiment; its hash identifies the report.
pub fn spec_value(cli: &Cli, extra: Value) -> Value {
    json!({
        "command": cli.command,
        "global": cli.global,
        "inputs": extra,
    })
}

pub fn spec_hash(spec: &Value) -> String {
    let bytes = serde_json::to_vec(spec).expect("spec serializes");
    Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    mode: ModeArg,
    spec_hash: String,
    spec: &'a Value,
    result: &'a Value,
}

pub struct Output {
    pub json: String,
    pub csv: Vec<(String, String)>,
}

pub fn render(cli: &Cli, spec: &Value, result: &Value) -> String {
    let env = Envelope {
        tool: "onetwo",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        seed: cli.global.seed,
        mode: cli.global.mode,
        spec_hash: spec_hash(spec),
        spec,
        result,
    };
    serde_json::to_string_pretty(&env).expect("report serializes") + "\n"
}

/// Prints the JSON report and writes it with any CSV files to `dir`.
pub fn emit(cli: &Cli, out: &Output) -> std::io::Result<()> {
    print!("{}", out.json);
    if let Some(dir) = &cli.global.out {
        fs::create_dir_all(dir)?;
        let name = cli.command.name();
        fs::write(dir.join(format!("{name}.json")), &out.json)?;
        for (file, body) in &out.csv {
            fs::write(Path::new(dir).join(file), body)?;
        }
    }
    Ok(())
}
